import logging
import math
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from PhotonicProtocols.constants import MAX_BRUTEFORCE_PERMANENT_SIZE, NORMALIZATION_TOL
from PhotonicProtocols.models.adaptive_sampling import (
    AdaptivePlan,
    collision_free_weight,
    distribution_crosscheck,
    norm_exceedance_demo,
    outcome_probability,
    sample_frequencies,
)
from PhotonicProtocols.models.bleeding import (
    bleeding_analytic,
    bleeding_sequential,
    bleeding_sequential_exact,
    sigma_bell_decomposition_check,
)
from PhotonicProtocols.models.chsh import (
    TSIRELSON_BOUND,
    chsh_experiment,
    chsh_value,
    derive_symmetric_chsh_unitary,
    two_lab_bell_baseline,
)
from PhotonicProtocols.models.experiment_config import (
    ExperimentConfig,
    RunReport,
    parse_int_list,
    resolve_data_path,
)
from PhotonicProtocols.models.faux_protocols import (
    FauxStage,
    faux_equivalence_check,
    random_faux_protocol,
)
from PhotonicProtocols.models.file_formats import (
    load_matrix,
    load_plan,
    load_povm,
    load_schedule,
    matrix_to_json,
)
from PhotonicProtocols.models.permanent import (
    gurvits_estimate,
    gurvits_sample_count,
    permanent_bruteforce,
    permanent_exact,
)
from PhotonicProtocols.models.povm import Povm, demo_povm, wlike_povm_check
from PhotonicProtocols.models.random_streams import make_generator
from PhotonicProtocols.models.resource_states import (
    approximation_error_scan,
    heralded_source_check,
)


@dataclass
class CommandResult:
    """Command output before it is wrapped in a RunReport. table holds
    the rows written by --csv."""

    results: Dict[str, Any] = field(default_factory=dict)
    criteria: Dict[str, bool] = field(default_factory=dict)
    table: Optional[List[Dict[str, Any]]] = None

    def add(self, section: str, report: Dict[str, Any]) -> None:
        """Files a module report under section, lifting its criteria into
        the run's criteria as section.name."""
        report = dict(report)
        for name, passed in report.pop("criteria", {}).items():
            self.criteria[f"{section}.{name}"] = bool(passed)
        self.results[section] = report


class ExperimentRunner:
    """Dispatches a validated ExperimentConfig to the matching protocol
    and collects its results into a RunReport."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.params = config.params
        self.seed = config.seed
        self.commands: Dict[str, Callable[[], CommandResult]] = {
            "bell": self.bell,
            "bleed-analytic": self.bleed_analytic,
            "bleed-seq": self.bleed_sequential,
            "faux-check": self.faux_check,
            "sample": self.sample,
            "permanent": self.permanent,
            "povm-check": self.povm_check,
            "wstate-fidelity": self.wstate_fidelity,
        }

    def run(self) -> RunReport:
        logging.info(f"Running {self.config.command} with seed {self.seed}.")
        start = time.perf_counter()
        outcome = self.commands[self.config.command]()
        elapsed = (time.perf_counter() - start) * 1000.0
        report = RunReport(
            self.config,
            outcome.results,
            outcome.criteria,
            round(elapsed, 3) if self.config.timing else None,
            outcome.table,
        )
        logging.info(
            f"{self.config.command} finished in {elapsed:.1f} ms, "
            f"{'passed' if report.passed else 'failed'}."
        )
        return report

    def bell(self) -> CommandResult:
        outcome = CommandResult()
        unitary = derive_symmetric_chsh_unitary()
        analytic = chsh_value(unitary)
        outcome.add(
            "derivation",
            {
                "unitary": matrix_to_json(unitary),
                "chsh_value": analytic,
                "identity_chsh_value": chsh_value(np.eye(2, dtype=complex)),
                "criteria": {"chsh_is_tsirelson": abs(analytic - TSIRELSON_BOUND) <= 1e-9},
            },
        )
        report = chsh_experiment(self.params["K"], self.params["trials"], self.seed, unitary)
        report.pop("unitary", None)
        outcome.add("experiment", report)
        outcome.add(
            "two_lab_baseline",
            two_lab_bell_baseline(self.params["baseline_trials"], self.seed),
        )
        return outcome

    def bleed_analytic(self) -> CommandResult:
        outcome = CommandResult()
        report = bleeding_analytic()
        outcome.table = report["outcomes"]
        outcome.add("bleeding", report)
        outcome.add("decomposition", sigma_bell_decomposition_check())
        outcome.results["success_probability"] = report["success_probability"]
        return outcome

    def bleed_sequential(self) -> CommandResult:
        outcome = CommandResult()
        outcome.add(
            "sampled",
            bleeding_sequential(self.params["K"], self.params["trials"], self.seed),
        )
        outcome.add("exact", bleeding_sequential_exact(self.params["exact_K"]))
        return outcome

    def _faux_protocols(self) -> List[List[FauxStage]]:
        if self.params["schedule"] is not None:
            steps = load_schedule(resolve_data_path(self.params["schedule"]))
            if any(step.adaptivity_rule for step in steps):
                logging.warning("Faux check ignores adaptivity rules in the schedule.")
            return [
                [
                    FauxStage(
                        step.interferometer.matrix,
                        step.interferometer.target_modes,
                        tuple(step.detect_modes),
                    )
                    for step in steps
                ]
            ]
        return [
            random_faux_protocol(
                self.params["N"],
                self.params["M"],
                make_generator(self.seed, index),
                self.params["stages"],
            )
            for index in range(self.params["protocols"])
        ]

    def faux_check(self) -> CommandResult:
        photons, modes = self.params["N"], self.params["M"]
        outcome = CommandResult(table=[])
        distances = []
        sampled = []
        for index, protocol in enumerate(self._faux_protocols()):
            report = faux_equivalence_check(
                photons, modes, protocol, self.params["trials"], self.seed + index
            )
            distances.append(report["total_variation"])
            if "sampled_total_variation" in report:
                sampled.append(report["sampled_total_variation"])
            for row in report["outcomes"]:
                outcome.table.append({"protocol": index, **row})
        outcome.results = {
            "N": photons,
            "M": modes,
            "protocols": len(distances),
            "total_variation": distances,
            "max_total_variation": max(distances),
        }
        if sampled:
            outcome.results["sampled_total_variation"] = sampled
        outcome.criteria = {
            "exact_total_variation": max(distances) <= NORMALIZATION_TOL,
        }
        return outcome

    def _plan(self) -> AdaptivePlan:
        if self.params["plan"] is not None:
            return load_plan(resolve_data_path(self.params["plan"]))
        return AdaptivePlan.random(self.params["K"], self.params["N"], self.seed)

    def sample(self) -> CommandResult:
        plan = self._plan()
        photons, num_parties = plan.photons, plan.num_parties
        outcome = CommandResult()
        outcome.results = {"N": photons, "K": num_parties, "plan": plan.to_records()}
        normalization = collision_free_weight(num_parties, photons)
        model = {
            k: normalization * outcome_probability(plan, k)
            for k in product(range(photons), repeat=photons)
        }
        outcome.table = [
            {"outcome": "-".join(map(str, k)), "probability_model": p}
            for k, p in sorted(model.items())
        ]

        if self.params["crosscheck"]:
            report = distribution_crosscheck(plan, self.params["exhaustive"])
            outcome.table = report["outcomes"]
            outcome.add("crosscheck", report)
            outcome.results["max_abs_diff"] = report["max_abs_diff"]
            outcome.results["normalization"] = report["normalization"]
            outcome.results["aborted_weight"] = report["aborted_weight"]

        trials = self.params["trials"]
        if trials > 0:
            frequencies = sample_frequencies(plan, trials, self.seed)
            sigmas_ok = True
            rows = {row["outcome"]: row for row in outcome.table}
            # The exact crosscheck already owns the simulated column.
            column = "probability_sampled" if self.params["crosscheck"] else "probability_simulated"
            for k, p in sorted(model.items()):
                label = "-".join(map(str, k))
                observed = frequencies["counts"].get(k, 0) / trials
                sigma = math.sqrt(p * (1.0 - p) / trials)
                if abs(observed - p) > 5.0 * sigma + 1.0 / trials:
                    sigmas_ok = False
                rows[label][column] = observed
                if not self.params["crosscheck"]:
                    rows[label]["abs_diff"] = abs(observed - p)
            aborted = frequencies["aborted"] / trials
            outcome.add(
                "sampling",
                {
                    "trials": trials,
                    "aborted_fraction": aborted,
                    "expected_aborted_fraction": 1.0 - normalization,
                    "criteria": {"frequencies_within_5_sigma": sigmas_ok},
                },
            )

        if self.params["norm_trials"] > 0:
            outcome.add(
                "norm_exceedance",
                norm_exceedance_demo(self.params["norm_trials"], self.seed),
            )
        return outcome

    def permanent(self) -> CommandResult:
        matrix = load_matrix(resolve_data_path(self.params["matrix"]))
        size = matrix.shape[0]
        method = self.params["method"]
        outcome = CommandResult()
        if method == "gurvits":
            epsilon, delta = self.params["epsilon"], self.params["delta"]
            value = gurvits_estimate(matrix, epsilon, delta, self.seed)
            outcome.results["samples"] = gurvits_sample_count(epsilon, delta)
            tolerance = epsilon
        elif method == "bruteforce":
            value = permanent_bruteforce(matrix)
            tolerance = 0.0
        else:
            value = permanent_exact(matrix)
            tolerance = 1e-10 * max(1.0, abs(value))
        outcome.results.update(
            {"n": size, "method": method, "permanent": {"re": value.real, "im": value.imag}}
        )
        if method != "bruteforce" and size <= MAX_BRUTEFORCE_PERMANENT_SIZE:
            reference = permanent_bruteforce(matrix)
            outcome.results["bruteforce"] = {"re": reference.real, "im": reference.imag}
            outcome.criteria["agrees_with_bruteforce"] = abs(value - reference) <= tolerance
        return outcome

    def povm_check(self) -> CommandResult:
        tol = self.params["tol"]
        outcome = CommandResult()
        if self.params["povm"] is not None:
            povm = load_povm(resolve_data_path(self.params["povm"]))
            verdicts = wlike_povm_check(povm, tol)
            reversed_verdicts = wlike_povm_check(
                Povm(povm.elements[::-1], povm.num_modes, povm.max_photons), tol
            )
            outcome.results = {"elements": len(povm.elements), "verdicts": verdicts}
            outcome.criteria["relabeling_invariant"] = reversed_verdicts[::-1] == verdicts
            return outcome

        cases = {
            "fourier": (demo_povm(), [True, True, True]),
            "perturbed": (demo_povm(rotation=0.05), [False, False, True]),
            "faux_detection": (Povm.faux_detection(3, 0), [False, False]),
        }
        for name, (povm, expected) in cases.items():
            verdicts = wlike_povm_check(povm, tol)
            outcome.add(
                name,
                {
                    "verdicts": verdicts,
                    "expected": expected,
                    "criteria": {"verdicts_as_expected": verdicts == expected},
                },
            )
        return outcome

    def wstate_fidelity(self) -> CommandResult:
        copies = parse_int_list(self.params["copies"], 1, 3, "copies")
        sizes = parse_int_list(self.params["heralded"], 1, 64, "heralded")
        outcome = CommandResult()
        scan = approximation_error_scan(copies)
        formula_ok = all(
            abs(row["collision_weight"] - row["collision_formula"]) <= NORMALIZATION_TOL
            for row in scan["rows"]
        )
        outcome.add(
            "approximation",
            {
                **scan,
                "criteria": {
                    "projection_matches_sigma_star": scan["normalized"],
                    "collision_weight_matches_formula": formula_ok,
                    "fidelity_monotone": scan["monotone"] or len(copies) < 2,
                },
            },
        )
        heralded = heralded_source_check(sizes)
        outcome.add(
            "heralded",
            {
                **heralded,
                "criteria": {
                    "sources_orthogonal": heralded["orthogonal"],
                    "correction_restores_w": heralded["corrected"],
                },
            },
        )
        return outcome
