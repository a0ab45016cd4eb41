-- The let-bound x captures c; the body mentions x only in a parameter.
prim c : {*} Top = fun (u: Top) => u in
let x = fun (y: Top) => c in
fun (z: {x} Top) => z
