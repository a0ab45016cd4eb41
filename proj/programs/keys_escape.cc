-- A boxed closure over fs outlives its binder; the empty key set does not
-- account for fs.
prim fs : {*} Top -> Top = fun (u: Top) => u in
let b = (let g = fun (u: Top) => fs u in box g) in
unbox {} b
