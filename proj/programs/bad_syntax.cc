-- Missing body after `in`.
let x = fun (u: Top) => u in
