"""The experiment scenarios behind the CLI. Each returns named tables (lists of row dicts) plus artifacts."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .affine import AffineMap, TrainingSet, apply_affine, fit_affine
from .codes import CODE, DetectionStrategy, basis_for, default_number_detection, standard_code
from .config import ExperimentConfig
from .decomp import noise_decomposition
from .errors import ConfigError
from .dynamics import (DisorderSpec, EvolutionConfig, HamiltonianParams, LossRates, default_fluctuating,
                       sample_channels)
from .mitigation import (EnsembleRecord, MitigationConfig, per_sample_lptms, proxy_consistency,
                         run_mitigation_experiment, simulate_ensemble, training_pairs)
from .tomography import Projection, lptm_from_blocks, lptm_trace_distance, process_fidelity, probe_states

# seed-stream roles; every ensemble's stream is (role, distribution index, grid index)
EVAL, TRAIN, BENCH, GAMMA = 0, 1, 2, 3


@dataclass
class Outcome:
    tables: dict[str, list[dict]] = field(default_factory=dict)
    maps: dict[str, AffineMap] = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    status: int = 0


def mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def _fluct(cfg: ExperimentConfig, modes: int) -> tuple[str, ...]:
    if cfg.fluctuating is None:
        return default_fluctuating(modes)
    valid = set(default_fluctuating(modes)) | {"U"}
    return tuple(n for n in cfg.fluctuating if n in valid)


def _evolution(cfg: ExperimentConfig) -> EvolutionConfig:
    return EvolutionConfig(t_final=cfg.t_final, dt=cfg.dt, integrator=cfg.integrator)


def mitigation_config(cfg: ExperimentConfig, proxy: str, distribution: str, sigma: float, gamma: float = 0.0,
                      affine_map: AffineMap | None = None) -> MitigationConfig:
    disorder = DisorderSpec(distribution, sigma, fluctuating=_fluct(cfg, 2), samples=cfg.samples)
    return MitigationConfig(code=cfg.code, proxy=proxy, alpha=cfg.alpha, beta=cfg.beta, target=cfg.target,
                            disorder=disorder, gamma=gamma, evolution=_evolution(cfg), affine_map=affine_map,
                            condition_cap=cfg.condition_cap, per_sample_inversion=cfg.per_sample_inversion)


def _distances(rec_a: tuple, rec_b: tuple, det_a, det_b, amap: AffineMap | None = None) -> tuple[float, list]:
    """Trace distance between two ensemble LPTMs and its per-sample counterparts; the map acts on ``rec_b``."""
    def fwd(T):
        return apply_affine(amap, T) if amap is not None else T

    Ta = lptm_from_blocks(rec_a[0].mean(0), rec_a[1].mean(0), det_a)
    Tb = lptm_from_blocks(rec_b[0].mean(0), rec_b[1].mean(0), det_b)
    per = [lptm_trace_distance(a, fwd(b)) for a, b in zip(per_sample_lptms(rec_a, det_a),
                                                          per_sample_lptms(rec_b, det_b))]
    return lptm_trace_distance(Ta, fwd(Tb)), per


# ---- proxy-leakage ---------------------------------------------------------

def proxy_leakage(cfg: ExperimentConfig) -> Outcome:
    """Distance between the proxy LPTM seen beside the code and seen alone, over sigma and gamma sweeps."""
    rows = []
    for di, dist in enumerate(cfg.distributions):
        for proxy in cfg.proxies:
            for gi, s in enumerate(cfg.sigmas):
                m = mitigation_config(cfg, proxy, dist, s)
                rec = simulate_ensemble(m, cfg.seed, (EVAL, di, gi), proxy_only=True)
                rows.append(_leak_row("sigma", dist, proxy, s, 0.0, m, rec))
    for proxy in cfg.proxies:
        for gi, g in enumerate(cfg.gammas):
            m = mitigation_config(cfg, proxy, cfg.distributions[0], 0.0, gamma=g)
            rec = simulate_ensemble(m, cfg.seed, (GAMMA, 0, gi), proxy_only=True)
            rows.append(_leak_row("gamma", "none", proxy, 0.0, g, m, rec))
    return Outcome({"proxy_leakage": rows}, notes={"gamma_sweep_sigma": 0.0})


def _leak_row(sweep, dist, proxy, sigma, gamma, m, rec: EnsembleRecord) -> dict:
    value = proxy_consistency(m, record=rec)
    _, per = _distances(rec.sup_proxy, rec.proxy, CODE, CODE)
    mean, se = mean_se(per)
    return {"sweep": sweep, "distribution": dist, "proxy": proxy, "sigma": sigma, "gamma": gamma,
            "samples": rec.samples, "trace_distance": value, "sample_mean": mean, "stderr": se}


# ---- affine-map training ---------------------------------------------------

def training_set(cfg: ExperimentConfig, proxy: str, di: int, sigma_indices=None) -> TrainingSet:
    """(proxy LPTM, code LPTM) pairs from a training ensemble disjoint from every evaluation ensemble."""
    dist = cfg.distributions[di]
    idx = range(len(cfg.sigmas)) if sigma_indices is None else sigma_indices
    pairs = []
    for gi in idx:
        m = mitigation_config(cfg, proxy, dist, cfg.sigmas[gi])
        rec = simulate_ensemble(m, cfg.seed, (TRAIN, di, gi), superposition=False, proxy_only=True, code_only=True)
        if cfg.map_pairing == "per-sample":
            pairs += training_pairs(rec)
        else:
            pairs.append((lptm_from_blocks(rec.proxy[0].mean(0), rec.proxy[1].mean(0), CODE),
                          lptm_from_blocks(rec.code[0].mean(0), rec.code[1].mean(0), CODE)))
    return TrainingSet(pairs)


def train_map(cfg: ExperimentConfig, proxy: str, di: int, sigma_indices=None, data: TrainingSet | None = None
              ) -> AffineMap:
    dist = cfg.distributions[di]
    idx = list(range(len(cfg.sigmas)) if sigma_indices is None else sigma_indices)
    data = data or training_set(cfg, proxy, di, idx)
    return fit_affine(data, cfg.map_method, code=cfg.code, proxy=proxy, seed=cfg.seed,
                      distribution=dist, sigmas=[cfg.sigmas[i] for i in idx], pairing=cfg.map_pairing)


def _maps_for(cfg: ExperimentConfig, proxy: str, di: int) -> dict[int, AffineMap]:
    """Map used at each sigma-grid index."""
    if cfg.map_file:
        m = AffineMap.load(cfg.map_file)
        return {gi: m for gi in range(len(cfg.sigmas))}
    if cfg.map_scope == "pooled":
        m = train_map(cfg, proxy, di)
        return {gi: m for gi in range(len(cfg.sigmas))}
    return {gi: train_map(cfg, proxy, di, [gi]) for gi in range(len(cfg.sigmas))}


def _map_key(dist: str, proxy: str, gi: int | None = None) -> str:
    return f"{dist}_{proxy}" + ("" if gi is None else f"_s{gi}")


def _store_maps(out: Outcome, cfg: ExperimentConfig, dist: str, proxy: str, maps: dict) -> None:
    if cfg.map_scope == "pooled" or cfg.map_file:
        out.maps[_map_key(dist, proxy)] = maps[0]
    else:
        for gi, m in maps.items():
            out.maps[_map_key(dist, proxy, gi)] = m


# ---- map-quality -----------------------------------------------------------

def map_quality(cfg: ExperimentConfig) -> Outcome:
    """Distance of the code LPTM from the proxy LPTM, with and without the learned map."""
    out = Outcome({"map_quality": []})
    rows = out.tables["map_quality"]
    for di, dist in enumerate(cfg.distributions):
        for proxy in cfg.proxies:
            maps = _maps_for(cfg, proxy, di) if cfg.mapped else {}
            if maps:
                _store_maps(out, cfg, dist, proxy, maps)
            for gi, s in enumerate(cfg.sigmas):
                m = mitigation_config(cfg, proxy, dist, s)
                rec = simulate_ensemble(m, cfg.seed, (EVAL, di, gi), superposition=False, proxy_only=True,
                                        code_only=True)
                variants = [(0, None)] + ([(1, maps[gi])] if maps else [])
                for mapped, amap in variants:
                    value, per = _distances(rec.code, rec.proxy, CODE, CODE, amap)
                    mean, se = mean_se(per)
                    rows.append({"distribution": dist, "proxy": proxy, "sigma": s, "mapped": mapped,
                                 "samples": rec.samples, "trace_distance": value, "sample_mean": mean,
                                 "stderr": se})
    return out


# ---- mitigate --------------------------------------------------------------

def mitigate(cfg: ExperimentConfig) -> Outcome:
    out = Outcome({"mitigate": []})
    rows = out.tables["mitigate"]
    for di, dist in enumerate(cfg.distributions):
        for proxy in cfg.proxies:
            maps = _maps_for(cfg, proxy, di) if cfg.mapped else {}
            if maps:
                _store_maps(out, cfg, dist, proxy, maps)
            for gi, s in enumerate(cfg.sigmas):
                m = mitigation_config(cfg, proxy, dist, s, affine_map=maps.get(gi))
                res = run_mitigation_experiment(m, cfg.seed, (EVAL, di, gi))
                variants = [(0, res.mitigated, res.stderr["mitigated"])]
                if res.mitigated_mapped is not None:
                    variants.append((1, res.mitigated_mapped, res.stderr["mitigated_mapped"]))
                raw, exact = res.raw.as_array(), res.exact.as_array()
                for mapped, mit, se in variants:
                    mit = mit.as_array()
                    row = {"distribution": dist, "proxy": proxy, "sigma": s, "gamma": m.gamma, "mapped": mapped,
                           "samples": res.samples}
                    for k, p in enumerate("xyz"):
                        row[f"raw_{p}"] = raw[k]
                    for k, p in enumerate("xyz"):
                        row[f"mit_{p}"] = mit[k]
                    for k, p in enumerate("xyz"):
                        row[f"exact_{p}"] = exact[k]
                    for k, p in enumerate("xyz"):
                        row[f"raw_d{p}"] = abs(raw[k] - exact[k])
                    for k, p in enumerate("xyz"):
                        row[f"d{p}"] = abs(mit[k] - exact[k])
                    for k, p in enumerate("xyz"):
                        row[f"raw_se_{p}"] = res.stderr["raw"][k]
                    for k, p in enumerate("xyz"):
                        row[f"se_{p}"] = se[k]
                    row["p_code_min"] = min(res.postselection["code"])
                    row["p_proxy_min"] = min(res.postselection["proxy"])
                    rows.append(row)
    return out


# ---- code-bench / noise-hist ----------------------------------------------

def _detection(code_name: str, label: str) -> DetectionStrategy:
    if label == "number":
        return default_number_detection(code_name)
    return DetectionStrategy.parse(label)


@dataclass
class BenchRecord:
    code: str
    detection: str
    strategy: DetectionStrategy
    blocks: np.ndarray
    probs: np.ndarray

    def lptm(self):
        return lptm_from_blocks(self.blocks.mean(0), self.probs.mean(0), self.strategy)

    def per_sample(self):
        return per_sample_lptms((self.blocks, self.probs), self.strategy)


def bench_records(cfg: ExperimentConfig, code_name: str, di: int, ci: int) -> list[BenchRecord]:
    """Probe one code under disorder plus loss and project the outputs for every detection strategy."""
    basis = basis_for([code_name])
    code = standard_code(code_name, basis)
    spec = DisorderSpec(cfg.distributions[di], cfg.sigma, fluctuating=_fluct(cfg, basis.modes), samples=cfg.samples)
    rates = LossRates.uniform(basis.modes, cfg.gamma)
    strategies = [(lbl, _detection(code_name, lbl)) for lbl in cfg.detections]
    projections = [Projection(code, st) for _, st in strategies]
    psis = probe_states(code)
    acc = [([], []) for _ in strategies]
    for _, ch in sample_channels(basis, spec, HamiltonianParams.zeros(basis.modes), rates, _evolution(cfg),
                                 cfg.seed, (BENCH, di, ci)):
        if ch.unitary is not None:
            outs = [ch.unitary @ p for p in psis]
        else:
            outs = list(ch(np.stack([np.outer(p, p.conj()) for p in psis])))
        for (blocks, probs), proj in zip(acc, projections):
            b, p = proj.project_all(outs)
            blocks.append(b)
            probs.append(p)
    return [BenchRecord(code_name, lbl, st, np.array(b), np.array(p))
            for (lbl, st), (b, p) in zip(strategies, acc)]


MEASURES = ("leakage", "markovian", "coherent", "non_markovian", "non_markovian_deviation")


def _bench_all(cfg: ExperimentConfig):
    for di, dist in enumerate(cfg.distributions):
        for ci, name in enumerate(cfg.codes):
            for rec in bench_records(cfg, name, di, ci):
                yield dist, rec


def code_bench(cfg: ExperimentConfig) -> Outcome:
    rows = []
    for dist, rec in _bench_all(cfg):
        per = [process_fidelity(T) for T in rec.per_sample()]
        mean, se = mean_se(per)
        rows.append({"distribution": dist, "code": rec.code, "detection": rec.detection,
                     "strategy": str(rec.strategy), "sigma": cfg.sigma, "gamma": cfg.gamma,
                     "samples": len(rec.probs), "fidelity": process_fidelity(rec.lptm()), "sample_mean": mean,
                     "stderr": se, "p_min": float(rec.probs.mean(0).min())})
    return Outcome({"code_bench": rows})


def _measures(T) -> list[float]:
    a = noise_decomposition(T, "paper")
    b = noise_decomposition(T, "deviation")
    return [a.leakage, a.markovian, a.coherent, a.non_markovian, b.non_markovian]


def noise_hist(cfg: ExperimentConfig) -> Outcome:
    rows = []
    for dist, rec in _bench_all(cfg):
        value = _measures(rec.lptm())
        per = np.array([_measures(T) for T in rec.per_sample()])
        for k, name in enumerate(MEASURES):
            mean, se = mean_se(per[:, k])
            rows.append({"distribution": dist, "code": rec.code, "detection": rec.detection, "measure": name,
                         "sigma": cfg.sigma, "gamma": cfg.gamma, "samples": len(rec.probs), "value": value[k],
                         "sample_mean": mean, "stderr": se})
    return Outcome({"noise_hist": rows})


# ---- fit-map ---------------------------------------------------------------

def fit_map(cfg: ExperimentConfig) -> Outcome:
    """Fit one map from a stored training set or from a freshly generated pooled ensemble."""
    if cfg.training_file:
        try:
            raw = json.loads(Path(cfg.training_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"training_file: cannot read {cfg.training_file}: {exc}") from None
        data = TrainingSet.from_dict(raw)
        amap = fit_affine(data, cfg.map_method, seed=cfg.seed, source=Path(cfg.training_file).name)
        key = "map"
    else:
        proxy = cfg.proxies[0]
        data = training_set(cfg, proxy, 0)
        amap = train_map(cfg, proxy, 0, data=data)
        key = _map_key(cfg.distributions[0], proxy)
    # Frobenius residual per training pair
    rows = [{"pair": i, "cost": 2 * lptm_trace_distance(tc, apply_affine(amap, tp))}
            for i, (tp, tc) in enumerate(data.pairs)]
    out = Outcome({"fit_map": rows}, maps={key: amap})
    out.notes = {"residual": amap.metadata["residual"], "rank": amap.metadata["rank"],
                 "underdetermined": amap.metadata["underdetermined"]}
    if amap.metadata["underdetermined"]:
        out.status = 4
    return out


RUNNERS = {
    "proxy-leakage": proxy_leakage,
    "map-quality": map_quality,
    "mitigate": mitigate,
    "code-bench": code_bench,
    "noise-hist": noise_hist,
    "fit-map": fit_map,
}


def run_experiment(cfg: ExperimentConfig) -> Outcome:
    return RUNNERS[cfg.experiment](cfg)


__all__ = ["Outcome", "run_experiment", "RUNNERS", "mean_se", "train_map", "training_set", "bench_records",
           "mitigation_config"]
