readings = list(range(800000))
spread = max(readings) - min(readings)
print(spread + spread)
