-- Two root-derived capabilities and a logger that captures fs.
-- A box holding the logger opens with key {fs}, since {l} <: {fs}.
prim fs : {*} Top = fun (u: Top) => u in
prim ct : {*} Top = fun (u: Top) => u in
let l = fun (u: Top) => let k = fs in u in
let b = box l in
unbox {fs} b
