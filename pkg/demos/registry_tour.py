"""Print the example catalog and run every self-check."""

from ratdyn.registry import get, list_examples, verify_all

for name in list_examples():
    ex = get(name)
    print(name)
    print(f"  Julia set: {ex.julia_description}")
    print(f"  K0 = {ex.k0}, K1 = {ex.k1}")
    print(f"  algebra: {ex.algebra_identification}")
    if ex.critical_in_julia_count is not None:
        print(f"  critical points on J: {ex.critical_in_julia_count}")

print()
out = verify_all()
for rep in out["reports"]:
    marks = " ".join(
        f"{c['check']}={'ok' if c['passed'] else 'FAIL'}" for c in rep["checks"])
    print(f"{rep['name']}: {marks}")
print(f"all passed: {out['passed']}")
