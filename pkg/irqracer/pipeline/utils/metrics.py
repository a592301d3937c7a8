"""
Per-stage timing and outcome metrics for the race pipeline
"""

from collections import defaultdict
from datetime import datetime, timezone
from typing import Any, Dict, List


class PipelineMetrics:
    """
    Collects stage durations and warning verdicts across runs
    """

    def __init__(self):
        self.metrics = defaultdict(list)
        self.start_time = datetime.now(timezone.utc)

    def record_processing_time(self, stage: str, duration: float, success: bool = True):
        """Record processing time for a specific stage"""
        self.metrics[f"{stage}_duration"].append(duration)
        self.metrics[f"{stage}_success"].append(success)

    def record_verdict(self, status: str):
        """Record the final status of one warning"""
        self.metrics["warning_statuses"].append(status)

    def record_strategy(self, strategy: str):
        """Record which repair strategy a plan used"""
        self.metrics["repair_strategies"].append(strategy)

    def get_performance_summary(self) -> Dict[str, Any]:
        """Summarize durations, verdict counts and success rates collected so far"""
        summary: Dict[str, Any] = {
            "measurement_start": self.start_time.isoformat(),
            "total_warnings": len(self.metrics.get("warning_statuses", [])),
        }

        performance = {}
        for key, durations in self.metrics.items():
            if not key.endswith("_duration") or not durations:
                continue
            stage = key[:-len("_duration")]
            performance[stage] = {
                "avg": sum(durations) / len(durations),
                "min": min(durations),
                "max": max(durations),
                "p95": self._percentile(durations, 95),
            }
        summary["performance"] = performance

        for key, name in (("warning_statuses", "verdicts"), ("repair_strategies", "strategies")):
            counts: Dict[str, int] = defaultdict(int)
            for value in self.metrics.get(key, []):
                counts[value] += 1
            summary[name] = dict(sorted(counts.items()))

        success_metrics = {}
        for key in self.metrics:
            if key.endswith("_success"):
                successes = self.metrics[key]
                success_metrics[key[:-len("_success")]] = (sum(successes) / len(successes)) * 100 if successes else 0
        summary["success_rates"] = success_metrics

        return summary

    def _percentile(self, data: List[float], percentile: int) -> float:
        """Calculate percentile value"""
        if not data:
            return 0.0
        sorted_data = sorted(data)
        index = int((percentile / 100) * len(sorted_data))
        return sorted_data[min(index, len(sorted_data) - 1)]

    def reset_metrics(self):
        """Reset all collected metrics"""
        self.metrics.clear()
        self.start_time = datetime.now(timezone.utc)
