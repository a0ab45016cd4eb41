-- A closure over a scoped file handle is returned in a box whose
-- capture set is the root. Opening it requires a `*` key.
prim fs : {*} Top -> Top = fun (u: Top) => u in
let usingFile = fun (op: {*} forall (f: {*} Top -> Top) -> Box {*} (Top -> Top)) => op fs in
let later = usingFile (fun (f: {*} Top -> Top) => box (fun (y: Top) => f y)) in
unbox {*} later
