-- Church-encoded lists. A list is its right fold; elements are boxed so the
-- list itself stays pure. map is strict and ticks once per element.
prim tick : {*} Top -> Top = fun (u: Top) => u in
let nil = tfun [T <: Box {*} Top] => tfun [C <: Box {*} Top] =>
  fun (op: {*} T -> {*} C -> C) => fun (s: C) => s in
let cons = tfun [T <: Box {*} Top] => fun (hd: T) =>
  fun (tl: forall [C <: Box {*} Top] -> forall (op: {*} T -> {*} C -> C) -> {op} C -> C) =>
  tfun [C <: Box {*} Top] => fun (op: {*} T -> {*} C -> C) => fun (s: C) =>
  op hd (tl [C] op s) in
let map = tfun [A <: Box {*} Top] => tfun [B <: Box {*} Top] =>
  fun (xs: forall [C <: Box {*} Top] -> forall (op: {*} A -> {*} C -> C) -> {op} C -> C) =>
  fun (f: {*} A -> B) =>
  let op = fun (hd: A) =>
    fun (tl: Box (forall [C <: Box {*} Top] -> forall (op: {*} B -> {*} C -> C) -> {op} C -> C)) =>
    box (cons [B] (f hd) (unbox {} tl)) in
  unbox {} (xs [Box (forall [C <: Box {*} Top] -> forall (op: {*} B -> {*} C -> C) -> {op} C -> C)] op (box (nil [B]))) in
let e = fun (u: Top) => u in
let xs = cons [Box Top] (box e) (cons [Box Top] (box e) (cons [Box Top] (box e) (nil [Box Top]))) in
let f = fun (a: Box Top) => let k = tick a in a in
map [Box Top] [Box Top] xs f
