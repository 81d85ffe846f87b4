xs = list(range(800000))
target = 37
found = False
for x in xs:
    if x == target:
        found = True
print(found, len(xs))
