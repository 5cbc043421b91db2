import pandas as pd

from patdiv.utils.errors import ValidationError


def file_size(variant):
    """Bytes of a variant: every instruction plus alignment padding."""
    return sum(instr.byte_len for function in variant.program.functions for instr in function.body)


def size_overhead(variant, baseline):
    base = file_size(baseline)
    if base == 0:
        raise ValidationError("baseline variant has no bytes")
    return (file_size(variant) - base) / base * 100


def file_size_table(variants, baseline):
    """Per-variant sizes and overhead against a baseline, plus a community mean row."""
    rows = [{"label": v.pattern_label, "bytes": file_size(v), "overhead_pct": size_overhead(v, baseline)} for v in variants]
    table = pd.DataFrame(rows, columns=["label", "bytes", "overhead_pct"])
    base = file_size(baseline)
    mean = table["bytes"].mean() if len(table) else float(base)
    summary = pd.DataFrame([{"label": "community mean", "bytes": mean, "overhead_pct": (mean - base) / base * 100}])
    return pd.concat([table, summary], ignore_index=True)
