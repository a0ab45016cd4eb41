-- The same box opens once fs is among the keys.
prim fs : {*} Top -> Top = fun (u: Top) => u in
let b = (let g = fun (u: Top) => fs u in box g) in
unbox {fs} b
