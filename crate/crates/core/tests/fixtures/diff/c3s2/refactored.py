xs = list(range(1200))
base = max(xs) - min(xs)
out = []
for x in xs:
    out.append(x + base)
print(len(out), sum(out))
