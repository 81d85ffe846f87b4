n = 5000
nums = list(range(2, n))
out = []
while nums:
    p = nums.pop(0)
    out.append(p)
    i = 0
    while i < len(nums):
        if nums[i] % p == 0:
            nums.pop(i)
        else:
            i += 1
print(len(out), out[-1])
