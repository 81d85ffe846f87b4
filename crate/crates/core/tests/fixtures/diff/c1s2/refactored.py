n = 700000
table = [i * 3 for i in range(n)]
print(sum(table))
