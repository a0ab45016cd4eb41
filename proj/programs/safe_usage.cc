-- The file handle is used inside the scope and only a pure result leaves it.
prim fs : {*} Top -> Top = fun (u: Top) => u in
let usingFile = tfun [T <: Top] => fun (op: {*} ({*} Top -> Top) -> T) => op fs in
let n = fun (u: Top) => u in
usingFile [Top] (fun (f: {*} Top -> Top) => f n)
