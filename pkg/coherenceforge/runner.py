"""
Verification runner
"""

import asyncio
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import ForgeConfig
from .models import SuiteName, SuiteStats, VerificationRecord
from .states import derive_seed
from .suites import SuiteParams, get_suite


class VerificationRunner:
    """
    Runs verification suites over seeded trials

    Examples:
        Basic usage:
        >>> runner = VerificationRunner()
        >>> stats = runner.run_suite_sync("cr-equality", trials=100, seed=7)
        >>> print(stats.failed_checks)

        With configuration file:
        >>> runner = VerificationRunner.from_config("coherenceforge_config.yaml")
        >>> runner.run_suite_sync("theorem1")
        >>> runner.export_jsonl("theorem1.jsonl")
    """

    def __init__(self, config: Optional[ForgeConfig] = None):
        self.config = config or ForgeConfig()
        self.records: List[VerificationRecord] = []
        self.suite_records: Dict[str, List[VerificationRecord]] = {}
        self.stats: Dict[str, SuiteStats] = {}
        self.runs: List[Dict[str, Any]] = []
        self._logger: Optional[logging.Logger] = None

        self._setup_logging()

    def _setup_logging(self):
        """Setup logging configuration"""
        self._logger = logging.getLogger('coherenceforge')
        self._logger.setLevel(getattr(logging, self.config.log_level))

        # Remove existing handlers
        for handler in self._logger.handlers[:]:
            self._logger.removeHandler(handler)

        # Console handler
        console_handler = logging.StreamHandler()
        console_formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        console_handler.setFormatter(console_formatter)
        self._logger.addHandler(console_handler)

        # File handler if specified
        if self.config.log_file:
            log_path = Path(self.config.log_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)

            file_handler = logging.FileHandler(log_path)
            file_handler.setFormatter(console_formatter)
            self._logger.addHandler(file_handler)

    @classmethod
    def from_config(cls, config_path: str) -> 'VerificationRunner':
        """Create a runner from a configuration file"""
        return cls(ForgeConfig.from_file(config_path))

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> 'VerificationRunner':
        """Create a runner from a configuration dictionary"""
        return cls(ForgeConfig.parse_config_data(config_dict))

    def default_params(self, **overrides) -> SuiteParams:
        """Suite parameters from the configuration; None overrides are ignored"""
        params = {
            "optimizer": self.config.optimizer,
            "ancilla_dim": self.config.ancilla_dim,
            "comparison_tol": self.config.comparison_tol,
        }
        params.update({k: v for k, v in overrides.items() if v is not None})
        return SuiteParams(**params)

    async def run_suite(self, name, trials: Optional[int] = None, seed: Optional[int] = None,
                        params: Optional[SuiteParams] = None) -> SuiteStats:
        """
        Run a suite with bounded concurrency

        Args:
            name: Suite name or SuiteName
            trials: Number of trials; config.trials when omitted
            seed: Master seed; config.seed when omitted
            params: Suite parameters; built from config when omitted

        Returns:
            SuiteStats of this run. Records are appended in trial order,
            whatever order the trials finish in.
        """
        suite = get_suite(name)
        trials = trials or self.config.trials
        seed = self.config.seed if seed is None else seed
        params = params or self.default_params()

        self._logger.info(
            f"Running suite {suite.name.value}: {trials} trial(s), seed {seed}, "
            f"dim {params.dim}, {self.config.threads} thread(s)"
        )

        semaphore = asyncio.Semaphore(self.config.threads)

        async def run_trial(trial: int) -> List[VerificationRecord]:
            async with semaphore:
                return await asyncio.to_thread(suite.run_trial, trial, derive_seed(seed, trial), params)

        results = await asyncio.gather(*(run_trial(t) for t in range(trials)))

        stats = SuiteStats(suite=suite.name.value)
        suite_records = self.suite_records.setdefault(suite.name.value, [])
        for trial_records in results:
            for record in trial_records:
                stats.update_stats(record)
                self.records.append(record)
                suite_records.append(record)
                if not record.passed:
                    self._logger.error(
                        f"{record.check} failed on trial {record.trial} (seed {record.seed}): "
                        f"lhs={record.lhs:.12g} rhs={record.rhs:.12g} margin={record.margin:.3e}"
                    )

        self.stats[suite.name.value] = stats
        self.runs.append({
            "suite": suite.name.value,
            "trials": trials,
            "seed": seed,
            "params": params.model_dump(mode='json'),
        })

        self._logger.info(
            f"Suite {suite.name.value} finished: {stats.passed_checks}/{stats.total_checks} checks passed"
        )
        return stats

    def run_suite_sync(self, name, trials: Optional[int] = None, seed: Optional[int] = None,
                       params: Optional[SuiteParams] = None) -> SuiteStats:
        """Blocking wrapper around run_suite"""
        return asyncio.run(self.run_suite(name, trials, seed, params))

    def get_failures(self, suite: Optional[str] = None) -> List[VerificationRecord]:
        """Failed records, optionally restricted to one suite's checks"""
        if suite is None:
            return [r for r in self.records if not r.passed]
        return [r for r in self.suite_records.get(SuiteName(suite).value, []) if not r.passed]

    def get_summary(self) -> Dict[str, Any]:
        """Overall pass/fail summary across all suites run so far"""
        total = sum(s.total_checks for s in self.stats.values())
        failed = sum(s.failed_checks for s in self.stats.values())
        margins = [s.worst_margin for s in self.stats.values() if s.worst_margin is not None]

        return {
            "status": "no_runs" if not self.stats else ("passed" if failed == 0 else "failed"),
            "suites": len(self.stats),
            "total_checks": total,
            "failed_checks": failed,
            "worst_margin": min(margins) if margins else None,
        }

    def export_jsonl(self, file_path: str):
        """
        Write a header line followed by one record per line

        Only the header carries a timestamp, so reruns with the same seed
        differ in the first line alone.
        """
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)

        header = {
            "generated_at": datetime.now().isoformat(),
            "runs": self.runs,
            "summary": self.get_summary(),
        }

        with open(path, 'w') as f:
            f.write(json.dumps(header, default=str) + "\n")
            for record in self.records:
                f.write(record.to_json_line() + "\n")

        self._logger.info(f"Wrote {len(self.records)} record(s) to {file_path}")
