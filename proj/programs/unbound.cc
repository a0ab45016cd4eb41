fun (u: Top) => v
