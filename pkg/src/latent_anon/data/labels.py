"""Label derivation helpers."""


def bin_weight(kg):
    """Map a body weight in kilograms to a three-way weight group.

    <= 70 kg is class 0, 70 < kg <= 90 is class 1, above 90 kg is class 2.
    """
    if kg <= 0:
        raise ValueError(f"weight must be positive, got {kg}")
    if kg <= 70.0:
        return 0
    if kg <= 90.0:
        return 1
    return 2
