-- Boxing a capability and opening it again with the matching key.
prim x : {*} Top = fun (u: Top) => u in
let y = box x in
unbox {x} y
