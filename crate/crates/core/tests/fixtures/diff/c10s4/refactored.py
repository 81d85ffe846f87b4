parts = ["ab%d" % i for i in range(300000)]
print(len("".join(parts)), len(parts))
