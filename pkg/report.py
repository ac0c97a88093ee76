"""
Report generation for experiment results: CSV rows, JSON summaries, SVG plots and the
Markdown acceptance report.
"""

import csv
import json
import os
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from stats import EmpiricalDistribution, Verdict
from utils import format_verdict


class RunLog:
    """Per-run plain-text log file under logs/."""

    def __init__(self, log_dir: str = "logs", tag: str = "run"):
        if not os.path.exists(log_dir):
            os.makedirs(log_dir)
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        self.log_path = os.path.join(log_dir, f"{tag}_{timestamp}.log")

    def log(self, message: str, echo: bool = True):
        if echo:
            print(message)
        with open(self.log_path, "a", encoding="utf-8") as f:
            f.write(f"{datetime.now().isoformat(timespec='seconds')} {message}\n")


class ReportGenerator:
    """Writes experiment artifacts into one output directory."""

    def __init__(self, output_dir: str = "results"):
        """
        Initialize the report generator.

        Args:
            output_dir: Directory to save artifacts
        """
        self.output_dir = output_dir
        self._ensure_output_dir()

    def _ensure_output_dir(self):
        """Create output directory if it doesn't exist."""
        if not os.path.exists(self.output_dir):
            os.makedirs(self.output_dir)

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        """
        Write rows with a header line, RFC-4180 quoting, UTF-8.

        Floats are written with repr so reruns with the same seed give identical bytes.
        """
        path = self._path(name)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, quoting=csv.QUOTE_MINIMAL, lineterminator='\r\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        """Write a JSON summary with stable key order."""
        path = self._path(name)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
        return path

    def write_summary(self, experiment: str, verdicts: List[Verdict], config_summary: Dict[str, Any],
                      extra: Optional[Dict[str, Any]] = None) -> str:
        payload = {
            'experiment': experiment,
            'config': config_summary,
            'verdicts': [v.to_dict() for v in verdicts],
            'passed': all(v.passed for v in verdicts),
        }
        if extra:
            payload['details'] = extra
        return self.write_json(f"{experiment}_summary.json", payload)

    def plot_ecdf(self, name: str, distributions: Dict[str, EmpiricalDistribution],
                  cdf: Optional[Callable] = None, title: str = "", cdf_label: str = "limit") -> str:
        """Overlay ECDFs, optionally against a reference CDF, as SVG."""
        fig, ax = plt.subplots(figsize=(6, 4))
        finite = [d.sorted_sample[np.isfinite(d.sorted_sample)] for d in distributions.values()]
        for (label, dist), values in zip(distributions.items(), finite):
            if values.size:
                ax.step(values, np.arange(1, values.size + 1) / dist.n, where='post', label=label)
        if cdf is not None and any(v.size for v in finite):
            lo = min(v.min() for v in finite if v.size)
            hi = max(v.max() for v in finite if v.size)
            grid = np.linspace(lo, hi, 400)
            ax.plot(grid, cdf(grid), 'k--', label=cdf_label)
        ax.set_title(title)
        ax.set_ylim(0.0, 1.0)
        ax.legend(loc='lower right', fontsize='small')
        path = self._path(name)
        fig.savefig(path, format='svg')
        plt.close(fig)
        return path

    def plot_trend(self, name: str, grid: Sequence[float], values: Sequence[float],
                   ses: Optional[Sequence[float]] = None, title: str = "", ylabel: str = "") -> str:
        """Values over an n-grid (log x axis) with 3-SE error bars, as SVG."""
        fig, ax = plt.subplots(figsize=(6, 4))
        yerr = None if ses is None else 3.0 * np.asarray(ses, dtype=float)
        ax.errorbar(grid, values, yerr=yerr, marker='o', capsize=3)
        ax.set_xscale('log')
        ax.set_xlabel('n')
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        path = self._path(name)
        fig.savefig(path, format='svg')
        plt.close(fig)
        return path

    def generate_report(self, results: Dict[str, List[Verdict]], config_summary: Dict[str, Any]) -> str:
        """
        Generate the Markdown acceptance report.

        Args:
            results: Verdicts per experiment, in run order
            config_summary: Parameters and seed of the run

        Returns:
            Formatted report string
        """
        all_verdicts = [v for verdicts in results.values() for v in verdicts]
        passed = sum(1 for v in all_verdicts if v.passed)

        report = f"""# Acceptance Report

**Run Date**: {datetime.now().strftime('%Y-%m-%d %H:%M')}
**Seed**: {config_summary.get('seed', 'Unknown')}
**Parameters**: {config_summary.get('params', {})}

## Overall Statistics

- **Experiments**: {len(results)}
- **Checks**: {len(all_verdicts)}
- **Passed**: {passed}
- **Failed**: {len(all_verdicts) - passed}

"""
        if all_verdicts and passed == len(all_verdicts):
            report += "✅ **All checks passed.**\n\n"
        else:
            report += "❌ **Some checks failed.** See the details below.\n\n"

        report += "## Check-by-Check Summary\n\n"
        for experiment, verdicts in results.items():
            report += f"### {experiment}\n\n"
            for v in verdicts:
                report += f"- {format_verdict(v.passed)} `{v.name}`"
                if v.metrics:
                    shown = ", ".join(f"{k}={_short(val)}" for k, val in v.metrics.items())
                    report += f" ({shown})"
                report += "\n"
            report += "\n"
        return report

    def save_report(self, report_content: str, tag: str = "acceptance") -> str:
        """
        Save a report to file.

        Returns:
            Full path to saved file
        """
        timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
        filepath = self._path(f"{tag}_report_{timestamp}.md")
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(report_content)
        return filepath

    def print_report(self, report_content: str):
        """Echo the report with Markdown headings turned into underlined titles."""
        rules = {'# ': '=', '## ': '-', '### ': '.'}
        for line in report_content.splitlines():
            marker = line.split(' ', 1)[0] + ' '
            if marker in rules and len(line) > len(marker):
                title = line[len(marker):]
                print(f"\n{title}\n{rules[marker] * len(title)}")
            else:
                print(line)


def _short(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{value:.4g}"
    return str(value)


def _json_default(value: Any):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
