use distib_core::data;

fn main() {
    let side = 14;
    let ds = data::synth_shapes(2, side, 0).unwrap();
    for i in [0usize, 2, 4, 1, 3, 5] {
        let f = &ds.factors().unwrap()[i];
        println!(
            "sample {i} class {} cx {:.2} cy {:.2} rot {:.2} scale {:.2}",
            f.class, f.center_x, f.center_y, f.rotation, f.scale
        );
        let row = ds.features().row_slice(i);
        for y in 0..side {
            let line: String = (0..side)
                .map(|x| {
                    let v = row[y * side + x];
                    if v > 0.75 { '#' } else if v > 0.35 { '+' } else if v > 0.05 { '.' } else { ' ' }
                })
                .collect();
            println!("|{line}|");
        }
        println!();
    }
}
