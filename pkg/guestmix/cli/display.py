"""
CLI display utilities for metrics, predictions, agreement and summaries.
"""

from __future__ import annotations

import os
import shutil
from typing import Any, Dict, Iterable, List, Sequence, Tuple

from guestmix.cli.console import write_console_text

# Enable ANSI escape sequences on Windows terminals that support VT100.
if os.name == "nt":
    os.system("")

_RESET = "\033[0m"
_BOLD = "\033[1m"
_DIM = "\033[2m"
_GREEN = "\033[32m"
_RED = "\033[1;31m"
_YELLOW = "\033[33m"


def _colored(text: str, style: str) -> str:
    return f"{style}{text}{_RESET}" if style else text


def _truncate(text: str, max_len: int) -> str:
    if max_len <= 0:
        return ""
    if len(text) <= max_len:
        return text
    if max_len <= 3:
        return "." * max_len
    return text[: max_len - 3] + "..."


def _get_terminal_width() -> int:
    try:
        return shutil.get_terminal_size().columns
    except Exception:
        return 80


def _separator(width: int) -> str:
    return f"  {'-' * max(8, width - 4)}"


def _label_str(label: bool) -> str:
    return _colored("yes", _GREEN) if label else _colored("no ", _DIM)


def _mark(ok: bool) -> str:
    return _colored("+", _GREEN) if ok else _colored("!", _RED)


def print_summary(title: str, items: Iterable[Tuple[str, Any]], outputs: Sequence[str] = ()) -> None:
    """Key/value block followed by the files a command wrote."""
    rows = list(items)
    separator = _separator(_get_terminal_width())
    key_width = max((len(key) for key, _ in rows), default=0) + 1

    print(f"\n  {_BOLD}{title}{_RESET}")
    print(separator)
    for key, value in rows:
        print(f"  {key + ':':<{key_width}} {value}")
    if outputs:
        print(separator)
        for path in outputs:
            print(f"  {_DIM}wrote {path}{_RESET}")
    print(separator)
    print()


def print_metrics(name: str, report: Dict[str, Any]) -> None:
    """One model's metrics as percentages plus the confusion counts."""
    separator = _separator(_get_terminal_width())
    confusion = report.get("confusion", {})
    print(f"\n  {_BOLD}{name}{_RESET}")
    print(separator)
    for key, label in (
        ("precision", "Precision"),
        ("recall", "Recall"),
        ("accuracy", "Accuracy"),
        ("f1_binary", "F1"),
        ("f1_macro", "F1 macro"),
        ("f1_weighted", "F1 weighted"),
    ):
        print(f"  {label + ':':<13} {100.0 * float(report.get(key, 0.0)):5.1f}")
    print(
        f"  {'Confusion:':<13} tp={confusion.get('tp', 0)} fp={confusion.get('fp', 0)} "
        f"tn={confusion.get('tn', 0)} fn={confusion.get('fn', 0)}"
    )
    flags = report.get("flags") or []
    if flags:
        print(f"  {'Flags:':<13} {_colored(', '.join(flags), _YELLOW)}")
    print(separator)
    print()


def print_predictions(rows: List[Dict[str, Any]], limit: int | None = None) -> None:
    """Probability, label and text per sentence."""
    if not rows:
        print(f"\n  {_DIM}No sentences.{_RESET}\n")
        return
    terminal_width = _get_terminal_width()
    text_width = max(20, terminal_width - 24)
    separator = _separator(terminal_width)
    shown = rows if limit is None else rows[:limit]

    print()
    print(f"  {_BOLD}{'p':>6}  {'label':<5}  {'Sentence':<{text_width}}{_RESET}")
    print(separator)
    for row in shown:
        text = _truncate(" ".join(str(row.get("text", "")).split()), text_width)
        print(f"  {row['probability']:6.3f}  {_label_str(row['label'])}    {text}")
    if len(shown) < len(rows):
        print(f"  {_DIM}... {len(rows) - len(shown)} more{_RESET}")
    print(separator)
    print()


def print_qualitative(report: Dict[str, Any]) -> None:
    terminal_width = _get_terminal_width()
    text_width = max(20, terminal_width - 34)
    separator = _separator(terminal_width)

    print(f"\n  {_BOLD}Qualitative suite{_RESET}  ({report['model']})")
    print(separator)
    print(f"  {_BOLD}{'':1}  {'p':>6}  {'gold':<4}  {'pred':<4}  {'Sentence':<{text_width}}{_RESET}")
    for row in report["rows"]:
        text = _truncate(row["text"], text_width)
        suffix = "" if row["required"] else f"  {_DIM}(not scored){_RESET}"
        print(
            f"  {_mark(row['correct'])}  {row['probability']:6.3f}  "
            f"{'T' if row['gold'] else 'F':<4}  {'T' if row['label'] else 'F':<4}  {text}{suffix}"
        )
        if row.get("oov_tokens"):
            print(f"  {'':<27}{_DIM}oov: {', '.join(row['oov_tokens'])}{_RESET}")
    print(separator)
    print(f"  Required rows correct: {report['required_correct']}/{report['required_total']}")
    print()


def print_agreement(report: Dict[str, Any]) -> None:
    separator = _separator(_get_terminal_width())
    kappa = report.get("fleiss_kappa")
    print(f"\n  {_BOLD}Inter-annotator agreement{_RESET}")
    print(separator)
    print(f"  Items:     {report['items']}  (raters per item: {report['raters']})")
    print(f"  Kappa:     {'undefined' if kappa is None else f'{kappa:.4f}'}")
    print(f"  Observed:  {report['observed_agreement']:.4f}")
    print(f"  Expected:  {report['expected_agreement']:.4f}")
    for name, value in sorted((report.get("category_kappa") or {}).items()):
        shown = "undefined" if value is None else f"{value:.4f}"
        print(f"  {_DIM}{name}: {shown}{_RESET}")
    print(separator)
    print()


def print_composition(estimates: List[Dict[str, Any]], limit: int = 20) -> None:
    if not estimates:
        print(f"\n  {_DIM}No business/window reached the minimum support.{_RESET}\n")
        return
    terminal_width = _get_terminal_width()
    separator = _separator(terminal_width)
    print()
    print(f"  {_BOLD}{'Business':<12} {'Window':<24} {'n':>6}  Top shares{_RESET}")
    print(separator)
    for estimate in estimates[:limit]:
        top = sorted(estimate["shares"].items(), key=lambda item: (-item[1], item[0]))[:4]
        shares = "  ".join(f"{country} {100 * share:.0f}%" for country, share in top)
        print(
            f"  {_truncate(estimate['business_id'], 12):<12} {estimate['window']:<24} "
            f"{estimate['support']:>6}  {shares}"
        )
    if len(estimates) > limit:
        print(f"  {_DIM}... {len(estimates) - limit} more{_RESET}")
    print(separator)
    print()


def print_gradcheck(results: List[Dict[str, Any]]) -> None:
    separator = _separator(_get_terminal_width())
    print(f"\n  {_BOLD}Gradient check{_RESET}")
    print(separator)
    for result in results:
        print(
            f"  {_mark(result['passed'])}  seed {result['seed']:<3} "
            f"max rel err {result['max_rel_error']:.2e}  ({result['checked']} entries, worst {result['worst_param']})"
        )
    print(separator)
    print()


def print_table_text(text: str) -> None:
    """Pre-rendered table, indented like the other views."""
    print()
    write_console_text("".join(f"  {line}\n" for line in text.splitlines()))
    print()
