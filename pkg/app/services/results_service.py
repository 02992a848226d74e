"""
Results Service for the bandit experiment runner
Turns harness reports into the CSV files and the sweep chart in an output directory
"""

import logging
from pathlib import Path
from typing import Dict, List, Tuple

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from experiments.harness import RegretReport, ScalingResult  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'

TRACE_COLUMNS = ['round', 'algorithm', 'epsilon', 'repetition', 'loss', 'cum_loss', 'lin_regret',
                 'step_norm', 'g_dual_norm']
SUMMARY_COLUMNS = ['algorithm', 'epsilon', 'repetition', 'final_cum_loss', 'final_lin_regret',
                   'bound_thm1', 'bound_thm2', 'max_abs_f', 'bound_lemma8', 'deviation_term', 'iterate_term']

Results = Dict[Tuple[str, float], List[RegretReport]]


class ResultsService:
    """
    Writes experiment outputs
    Every CSV uses a fixed column order and 17 significant digits per float
    """

    def __init__(self, out_dir: Path):
        """
        Initialize the results service

        Args:
            out_dir: directory receiving the output files (created if missing)
        """
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def _write_csv(self, frame: pd.DataFrame, filename: str) -> Path:
        path = self.out_dir / filename
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        logger.info(f"💾 Wrote {len(frame)} rows to {path}")
        return path

    @staticmethod
    def trace_frame(results: Results) -> pd.DataFrame:
        """One row per round of every run"""
        frames = []
        for reports in results.values():
            for r in reports:
                frames.append(pd.DataFrame({
                    'round': range(1, r.horizon + 1),
                    'algorithm': r.algorithm,
                    'epsilon': r.epsilon,
                    'repetition': r.repetition,
                    'loss': r.losses,
                    'cum_loss': r.cum_loss,
                    'lin_regret': r.lin_regret_trace,
                    'step_norm': r.step_norms,
                    'g_dual_norm': r.dual_norms,
                }, columns=TRACE_COLUMNS))
        if not frames:
            return pd.DataFrame(columns=TRACE_COLUMNS)
        return pd.concat(frames, ignore_index=True)

    @staticmethod
    def summary_frame(results: Results) -> pd.DataFrame:
        """One row per run"""
        rows = [
            {
                'algorithm': r.algorithm,
                'epsilon': r.epsilon,
                'repetition': r.repetition,
                'final_cum_loss': r.final_cum_loss,
                'final_lin_regret': r.linearized_regret,
                'bound_thm1': r.bounds['thm1'],
                'bound_thm2': r.bounds['thm2'],
                'max_abs_f': r.max_abs_f,
                'bound_lemma8': r.bounds['lemma8'],
                'deviation_term': r.deviation_term,
                'iterate_term': r.iterate_term,
            }
            for reports in results.values()
            for r in reports
        ]
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    def write_run(self, results: Results) -> List[Path]:
        """trace.csv and summary.csv"""
        return [
            self._write_csv(self.trace_frame(results), 'trace.csv'),
            self._write_csv(self.summary_frame(results), 'summary.csv'),
        ]

    def write_sweep(self, table: pd.DataFrame) -> List[Path]:
        """sweep.csv and the sweep.svg line chart"""
        return [self._write_csv(table, 'sweep.csv'), self.write_chart(table)]

    def write_scaling(self, result: ScalingResult) -> Path:
        return self._write_csv(result.to_frame(), 'scaling.csv')

    def write_chart(self, table: pd.DataFrame, filename: str = 'sweep.svg') -> Path:
        """
        Mean cumulative loss against epsilon, one line per algorithm

        Args:
            table: frame with algorithm, epsilon and mean_cum_loss columns
            filename: name of the SVG file inside the output directory

        Returns:
            Path of the written chart
        """
        path = self.out_dir / filename
        plt.rcParams['svg.hashsalt'] = 'sweep'
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        try:
            for algorithm, group in table.groupby('algorithm', sort=False):
                group = group.sort_values('epsilon')
                ax.plot(group['epsilon'], group['mean_cum_loss'], marker='o', label=algorithm)
            ax.set_xlabel('epsilon')
            ax.set_ylabel('mean cumulative loss')
            ax.grid(True, alpha=0.3)
            ax.legend()
            fig.tight_layout()
            fig.savefig(path, format='svg', metadata={'Date': None})
        finally:
            plt.close(fig)
        logger.info(f"📊 Wrote chart to {path}")
        return path
