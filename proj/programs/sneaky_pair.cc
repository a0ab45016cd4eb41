-- The handle tunnels through a type instantiation and is opened with `*`.
prim fs : {*} Top -> Top = fun (u: Top) => u in
let usingLogFile = tfun [T <: Box {*} Top] => fun (op: {*} ({*} Top -> Top) -> T) => op fs in
let sneaky = usingLogFile [Box {*} (Top -> Top)] (fun (f: {*} Top -> Top) => let g = fun (u: Top) => f u in box g) in
let h = unbox {*} sneaky in
h h
