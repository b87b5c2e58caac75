"""Experiment orchestration: train, attack, defend, detect, measure, report.

Every stochastic component gets a seed derived from the global seed and the
stage name, so a config plus a seed reproduces the whole run; the canonical
report (report.json) excludes wall-clock timings, which go to timings.json.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from .. import __version__ as tool_version
from ..classifier import ClipValues, MlpArchitecture, MlpClassifier, TrainConfig
from ..data import Dataset
from ..defences import (
    AdversarialTrainer,
    FeatureSqueezing,
    GaussianAugmentation,
    LabelSmoothing,
    SpatialSmoothing,
    ThermometerEncoding,
    TotalVarianceMinimization,
)
from ..detection import BinaryActivationDetector, BinaryInputDetector
from ..exceptions import InvalidConfigError
from ..metrics import (
    CleverConfig,
    clever_u,
    empirical_robustness,
    loss_sensitivity,
)
from ..numerics import NormKind
from ..poison import ActivationClusteringConfig, evaluate_verdict, scan_for_poison
from ..utils import derive_seed, one_hot
from .datasets import apply_trigger, inject_backdoor, load_csv, load_idx, synth_dataset

ALL_STAGES = ("train", "attack", "defend", "detect", "metrics", "poison")


# ------------------------------------------------------------- construction


def build_dataset(spec: dict) -> Dataset:
    if "name" in spec:
        return synth_dataset(spec)
    if "idx_images" in spec:
        return load_idx(spec["idx_images"], spec["idx_labels"])
    if "csv" in spec:
        return load_csv(spec["csv"])
    raise InvalidConfigError("dataset spec needs 'name', 'idx_images' or 'csv'")


def build_attack(classifier, spec: dict, seed: int, image_shape=None):
    from ..attacks import (
        BasicIterativeMethod,
        BoundaryAttack,
        CarliniL2Method,
        CarliniLInfMethod,
        DeepFool,
        FastGradientMethod,
        NewtonFool,
        ProjectedGradientDescent,
        SaliencyMapMethod,
        SpatialTransformation,
        UniversalPerturbation,
        VirtualAdversarialMethod,
    )

    spec = dict(spec)
    name = spec.pop("name", None)
    norm = NormKind.from_string(spec.pop("norm")) if "norm" in spec else None
    if name == "fgsm":
        return FastGradientMethod(classifier, norm=norm or NormKind.LINF, **spec)
    if name == "bim":
        return BasicIterativeMethod(classifier, **spec)
    if name == "pgd":
        return ProjectedGradientDescent(
            classifier, norm=norm or NormKind.LINF, seed=seed, **spec
        )
    if name == "jsma":
        return SaliencyMapMethod(classifier, **spec)
    if name == "cw_l2":
        return CarliniL2Method(classifier, **spec)
    if name == "cw_linf":
        return CarliniLInfMethod(classifier, **spec)
    if name == "deepfool":
        return DeepFool(classifier, **spec)
    if name == "universal":
        inner = build_attack(classifier, spec.pop("inner_attack"), seed, image_shape)
        return UniversalPerturbation(
            classifier, inner, norm=norm or NormKind.L2, seed=seed, **spec
        )
    if name == "newtonfool":
        return NewtonFool(classifier, **spec)
    if name == "vat":
        return VirtualAdversarialMethod(classifier, seed=seed, **spec)
    if name == "spatial":
        if image_shape is None:
            raise InvalidConfigError("spatial attack needs an image dataset")
        return SpatialTransformation(classifier, image_shape=image_shape, **spec)
    if name == "boundary":
        return BoundaryAttack(classifier, seed=seed, **spec)
    raise InvalidConfigError(f"unknown attack {name!r}")


def build_defence(spec: dict, seed: int, image_shape=None):
    spec = dict(spec)
    name = spec.pop("name", None)
    if name == "feature_squeezing":
        return FeatureSqueezing(**spec)
    if name == "label_smoothing":
        return LabelSmoothing(**spec)
    if name == "spatial_smoothing":
        if image_shape is None:
            raise InvalidConfigError("spatial smoothing needs an image dataset")
        return SpatialSmoothing(image_shape=image_shape, **spec)
    if name == "thermometer":
        return ThermometerEncoding(**spec)
    if name == "tvm":
        if image_shape is None:
            raise InvalidConfigError("total variance minimization needs an image dataset")
        if "norm" in spec:
            spec["norm"] = NormKind.from_string(spec["norm"])
        return TotalVarianceMinimization(image_shape=image_shape, seed=seed, **spec)
    if name == "gaussian_augmentation":
        return GaussianAugmentation(seed=seed, **spec)
    raise InvalidConfigError(f"unknown defence {name!r}")


def defended_input_width(raw_width: int, defences) -> int:
    width = raw_width
    for defence in defences:
        if isinstance(defence, ThermometerEncoding):
            width *= defence.num_buckets
    return width


def build_model(
    dataset: Dataset, model_spec: dict, seed: int, defences=(), init_seed=None
) -> MlpClassifier:
    width = defended_input_width(dataset.input_dim, defences)
    arch = MlpArchitecture(
        input_dim=width,
        hidden_sizes=tuple(model_spec.get("hidden_sizes", (16,))),
        num_classes=dataset.num_classes,
        activation=model_spec.get("activation", "relu"),
    )
    return MlpClassifier(
        arch,
        clip=ClipValues(0.0, 1.0),
        defences=list(defences),
        rng_seed=init_seed if init_seed is not None else derive_seed(seed, "model-init"),
    )


def build_train_config(train_spec: dict, seed: int, rng_seed=None) -> TrainConfig:
    return TrainConfig(
        batch_size=int(train_spec.get("batch_size", 32)),
        nb_epochs=int(train_spec.get("nb_epochs", 20)),
        learning_rate=float(train_spec.get("learning_rate", 0.5)),
        rng_seed=rng_seed if rng_seed is not None else derive_seed(seed, "train"),
    )


# ------------------------------------------------------------------ helpers


def accuracy(classifier, x: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(classifier.predict_classes(x) == labels))


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-statistic AUC of scores against binary labels (1 = positive)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    pos = scores[labels]
    neg = scores[~labels]
    if pos.size == 0 or neg.size == 0:
        raise InvalidConfigError("AUC needs both positive and negative samples")
    order = np.argsort(np.concatenate([pos, neg]), kind="mergesort")
    ranks = np.empty(order.size, dtype=np.float64)
    ranks[order] = np.arange(1, order.size + 1)
    # midranks for ties
    combined = np.concatenate([pos, neg])
    sorted_vals = combined[order]
    i = 0
    while i < sorted_vals.size:
        j = i
        while j + 1 < sorted_vals.size and sorted_vals[order[j + 1]] == sorted_vals[order[i]]:
            j += 1
        if j > i:
            mid = (i + 1 + j + 1) / 2.0
            for k in range(i, j + 1):
                ranks[order[k]] = mid
        i = j + 1
    r_pos = ranks[: pos.size].sum()
    u = r_pos - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def norm_stats(norms: dict[NormKind, np.ndarray], mask: np.ndarray) -> dict:
    out = {}
    for kind, values in norms.items():
        sub = values[mask] if mask.any() else values[:0]
        key = {"0": "l0", "1": "l1", "2": "l2", "inf": "linf"}[kind.value]
        if sub.size:
            out[key] = {"mean": float(sub.mean()), "median": float(np.median(sub))}
        else:
            out[key] = {"mean": None, "median": None}
    return out


def split_dataset(dataset: Dataset, test_fraction: float, seed: int):
    n_test = max(1, int(round(dataset.n * test_fraction)))
    order = np.random.default_rng(derive_seed(seed, "split")).permutation(dataset.n)
    test_idx, train_idx = order[:n_test], order[n_test:]
    return dataset.subset(train_idx), dataset.subset(test_idx)


# -------------------------------------------------------------- experiment


def run_experiment(config: dict, out_dir, stages=None) -> tuple[dict, dict]:
    """Execute the requested stages and return (report, timings).

    Stage failures are recorded in report["failures"] and later stages still
    run where their inputs exist; artifacts (model, adversarial tensors,
    verdict table) are persisted under out_dir.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stages = tuple(stages or ALL_STAGES)
    seed = int(config.get("seed", 0))
    report: dict = {
        "tool_version": tool_version,
        "config": config,
        "seed": seed,
        "derived_seeds": {},
        "failures": [],
    }
    timings: dict = {}

    def stage_seed(*labels) -> int:
        value = derive_seed(seed, *labels)
        report["derived_seeds"]["/".join(str(l) for l in labels)] = value
        return value

    def run_stage(name: str, fn):
        if name not in stages:
            return
        start = time.perf_counter()
        try:
            fn()
        except Exception as exc:  # record and continue with partial results
            report["failures"].append({"stage": name, "error": str(exc)})
        finally:
            timings[name] = time.perf_counter() - start

    state: dict = {}

    def stage_train():
        dataset = build_dataset(config["dataset"])
        train_set, test_set = split_dataset(
            dataset, float(config.get("test_fraction", 0.3)), seed
        )
        defences = [
            build_defence(d, stage_seed("defence", i), dataset.image_shape)
            for i, d in enumerate(config.get("model_defences", []))
        ]
        model = build_model(
            train_set, config.get("model", {}), seed, defences,
            init_seed=stage_seed("model-init"),
        )
        tcfg = build_train_config(
            config.get("train", {}), seed, rng_seed=stage_seed("train")
        )
        log = model.fit(train_set.x, train_set.y, tcfg)
        model.save(out / "model.json")
        np.save(out / "x_test.npy", test_set.x)
        np.save(out / "y_test.npy", test_set.y)
        state.update(model=model, train_set=train_set, test_set=test_set, tcfg=tcfg)
        report["clean_accuracy"] = accuracy(model, test_set.x, test_set.labels())
        report["train_log"] = {
            "final_loss": log.epoch_losses[-1],
            "final_accuracy": log.epoch_accuracies[-1],
        }

    def stage_attack():
        model, test_set = state["model"], state["test_set"]
        records = []
        for i, spec in enumerate(config.get("attacks", [])):
            attack = build_attack(
                model, spec, stage_seed("attack", i), test_set.image_shape
            )
            result = attack.generate(test_set.x)
            artifact = f"x_adv_{i}_{spec.get('name', 'attack')}.npy"
            np.save(out / artifact, result.x_adv)
            records.append(
                {
                    "name": spec.get("name"),
                    "params": {k: v for k, v in spec.items() if k != "name"},
                    "adversarial_accuracy": accuracy(
                        model, result.x_adv, test_set.labels()
                    ),
                    "success_rate": result.success_rate,
                    "perturbation": norm_stats(result.norms, result.success),
                    "mean_queries": float(result.queries.mean()),
                    "artifact": artifact,
                }
            )
            state.setdefault("attack_results", []).append((spec, result))
        report["attacks"] = records

    def stage_defend():
        model, test_set, train_set = state["model"], state["test_set"], state["train_set"]
        labels = test_set.labels()
        records = []
        for i, spec in enumerate(config.get("defences", [])):
            defence = build_defence(
                spec, stage_seed("eval-defence", i), test_set.image_shape
            )
            if isinstance(defence, (LabelSmoothing, GaussianAugmentation, ThermometerEncoding)):
                # fit-time defences change training, not this inference pipeline
                records.append({"name": spec.get("name"), "note": "fit-time defence; not evaluated at predict time"})
                continue
            defended_x = defence(test_set.x, None)[0]
            clean = accuracy(model, defended_x, labels)
            rec = {
                "name": spec.get("name"),
                "clean_accuracy": clean,
                "clean_accuracy_delta": clean - report["clean_accuracy"],
            }
            per_attack = {}
            deltas = {}
            for aspec, result in state.get("attack_results", []):
                defended_adv = defence(result.x_adv, None)[0]
                acc = accuracy(model, defended_adv, labels)
                undefended = accuracy(model, result.x_adv, labels)
                per_attack[aspec.get("name")] = acc
                deltas[aspec.get("name")] = acc - undefended
            rec["adversarial_accuracy"] = per_attack
            rec["adversarial_accuracy_delta"] = deltas
            records.append(rec)
        report["defences"] = records
        adv_spec = config.get("adversarial_training")
        if adv_spec:
            report["adversarial_training"] = _adversarial_training_record(
                config, state, adv_spec, seed, stage_seed
            )

    def stage_detect():
        det_spec = config.get("detector")
        if not det_spec:
            return
        report["detector"] = _detector_record(config, state, det_spec, stage_seed)

    def stage_metrics():
        model, test_set = state["model"], state["test_set"]
        m_spec = config.get("metrics", {})
        record = {}
        if "empirical_robustness" in m_spec:
            er_spec = dict(m_spec["empirical_robustness"])
            attack = build_attack(
                model, er_spec["attack"], stage_seed("er"), test_set.image_shape
            )
            p = NormKind.from_string(er_spec.get("norm", "2"))
            record["empirical_robustness"] = empirical_robustness(
                model, attack, test_set, p
            )
        if m_spec.get("loss_sensitivity"):
            record["loss_sensitivity"] = loss_sensitivity(model, test_set.x, test_set.y)
        if "clever" in m_spec:
            c_spec = dict(m_spec["clever"])
            num_samples = int(c_spec.pop("num_samples", 5))
            if "norm" in c_spec:
                c_spec["norm"] = NormKind.from_string(c_spec["norm"])
            cfg = CleverConfig(seed=stage_seed("clever"), **c_spec)
            scores = [
                clever_u(model, test_set.x[i], cfg).score
                for i in range(min(num_samples, test_set.n))
            ]
            record["clever"] = {
                "scores": scores,
                "mean": float(np.mean(scores)),
                "min": float(np.min(scores)),
            }
        report["metrics"] = record

    def stage_poison():
        p_spec = config.get("poison")
        if not p_spec:
            return
        report["poison"] = _poison_record(config, p_spec, seed, out, stage_seed)

    run_stage("train", stage_train)
    if "model" in state:
        run_stage("attack", stage_attack)
        run_stage("defend", stage_defend)
        run_stage("detect", stage_detect)
        run_stage("metrics", stage_metrics)
    run_stage("poison", stage_poison)

    write_report(report, timings, out)
    return report, timings


def _adversarial_training_record(config, state, adv_spec, seed, stage_seed) -> dict:
    model, train_set, test_set, tcfg = (
        state["model"], state["train_set"], state["test_set"], state["tcfg"],
    )
    attack_spec = adv_spec["attack"]
    labels = test_set.labels()
    baseline_attack = build_attack(
        model, attack_spec, stage_seed("advtrain-baseline"), test_set.image_shape
    )
    baseline_robust = accuracy(model, baseline_attack.generate(test_set.x).x_adv, labels)

    hardened = build_model(train_set, config.get("model", {}), seed, init_seed=stage_seed("hardened"))
    train_attack = build_attack(
        hardened, attack_spec, stage_seed("advtrain-craft"), train_set.image_shape
    )
    trainer = AdversarialTrainer(
        hardened, [train_attack], ratio=float(adv_spec.get("ratio", 0.5))
    )
    trainer.fit(train_set.x, train_set.y, tcfg)
    eval_attack = build_attack(
        hardened, attack_spec, stage_seed("advtrain-eval"), test_set.image_shape
    )
    hardened_robust = accuracy(hardened, eval_attack.generate(test_set.x).x_adv, labels)
    return {
        "attack": attack_spec,
        "baseline_clean_accuracy": accuracy(model, test_set.x, labels),
        "baseline_robust_accuracy": baseline_robust,
        "hardened_clean_accuracy": accuracy(hardened, test_set.x, labels),
        "hardened_robust_accuracy": hardened_robust,
        "robust_accuracy_gain": hardened_robust - baseline_robust,
    }


def _detector_record(config, state, det_spec, stage_seed) -> dict:
    model, train_set, test_set, tcfg = (
        state["model"], state["train_set"], state["test_set"], state["tcfg"],
    )
    attack_spec = det_spec.get("attack") or (config.get("attacks") or [{"name": "fgsm", "eps": 0.3}])[0]
    craft = build_attack(model, attack_spec, stage_seed("detector-craft"), train_set.image_shape)
    adv_train = craft.generate(train_set.x).x_adv
    adv_test = craft.generate(test_set.x).x_adv

    mix_x = np.concatenate([train_set.x, adv_train])
    mix_y = one_hot(
        np.concatenate([np.zeros(train_set.n, dtype=int), np.ones(train_set.n, dtype=int)]), 2
    )
    kind = det_spec.get("kind", "input")
    inner_hidden = tuple(det_spec.get("hidden_sizes", (32,)))
    if kind == "input":
        inner = MlpClassifier(
            MlpArchitecture(model.input_dim, inner_hidden, 2),
            clip=model.clip,
            rng_seed=stage_seed("detector-inner"),
        )
        detector = BinaryInputDetector(inner)
    elif kind == "activation":
        layer = int(det_spec.get("layer", 0))
        width = model.architecture.hidden_sizes[layer]
        inner = MlpClassifier(
            MlpArchitecture(width, inner_hidden, 2),
            clip=model.clip,
            rng_seed=stage_seed("detector-inner"),
        )
        detector = BinaryActivationDetector(model, layer, inner)
    else:
        raise InvalidConfigError(f"unknown detector kind {kind!r}")
    det_cfg = TrainConfig(
        batch_size=tcfg.batch_size,
        nb_epochs=int(det_spec.get("nb_epochs", tcfg.nb_epochs)),
        learning_rate=tcfg.learning_rate,
        rng_seed=stage_seed("detector-fit"),
    )
    detector.fit(mix_x, mix_y, det_cfg)
    eval_x = np.concatenate([test_set.x, adv_test])
    eval_labels = np.concatenate([np.zeros(test_set.n, dtype=int), np.ones(test_set.n, dtype=int)])
    decisions = detector(eval_x)
    return {
        "kind": kind,
        "attack": attack_spec,
        "auc": roc_auc(detector.scores(eval_x), eval_labels),
        "accuracy": float(np.mean(decisions == eval_labels)),
    }


def _poison_record(config, p_spec, seed, out, stage_seed) -> dict:
    dataset = build_dataset(config["dataset"])
    train_set, test_set = split_dataset(
        dataset, float(config.get("test_fraction", 0.3)), seed
    )
    trigger = p_spec["trigger_indices"]
    value = float(p_spec.get("trigger_value", 1.0))
    target = int(p_spec.get("target_class", 1))
    fraction = float(p_spec.get("fraction", 0.1))
    poisoned, is_poison = inject_backdoor(
        train_set, trigger, value, fraction, target, seed=stage_seed("poison")
    )
    model = build_model(poisoned, config.get("model", {}), seed, init_seed=stage_seed("poisoned-model"))
    tcfg = build_train_config(config.get("train", {}), seed, rng_seed=stage_seed("poison-train"))
    model.fit(poisoned.x, poisoned.y, tcfg)

    labels_test = test_set.labels()
    non_target = labels_test != target
    triggered = apply_trigger(test_set.x[non_target], trigger, value)
    backdoor_before = float(np.mean(model.predict_classes(triggered) == target))
    clean_acc = accuracy(model, test_set.x, labels_test)

    cfg = ActivationClusteringConfig(
        reduced_dims=int(p_spec.get("reduced_dims", 10)),
        analyzer=p_spec.get("analyzer", "relative_size"),
        size_threshold=float(p_spec.get("size_threshold", 0.35)),
        seed=stage_seed("poison-scan"),
    )
    verdict = scan_for_poison(model, poisoned, cfg)
    (out / "poison_verdict.tsv").write_text(verdict.to_table(), encoding="utf-8")
    evaluation = evaluate_verdict(verdict.suspected, is_poison, verdict.predicted_classes)

    keep = ~verdict.suspected
    repaired = build_model(poisoned, config.get("model", {}), seed, init_seed=stage_seed("repaired-model"))
    repaired.fit(poisoned.x[keep], poisoned.y[keep], tcfg)
    backdoor_after = float(np.mean(repaired.predict_classes(triggered) == target))
    return {
        "target_class": target,
        "fraction": fraction,
        "num_poisoned": int(is_poison.sum()),
        "clean_accuracy": clean_acc,
        "backdoor_success_before": backdoor_before,
        "verdict_summary": verdict.summary(),
        "evaluation": evaluation,
        "backdoor_success_after_repair": backdoor_after,
        "repaired_clean_accuracy": accuracy(repaired, test_set.x, labels_test),
    }


# ---------------------------------------------------------------- reporting


def report_text(report: dict) -> str:
    """Human-readable tabular summary of the structured report."""
    lines = [f"advkit {report['tool_version']}  seed={report['seed']}"]
    if "clean_accuracy" in report:
        lines.append(f"clean accuracy           {report['clean_accuracy']:.4f}")
    for rec in report.get("attacks", []):
        lines.append(
            f"attack {rec['name']:<12} adv-acc {rec['adversarial_accuracy']:.4f}  "
            f"success {rec['success_rate']:.4f}"
        )
    for rec in report.get("defences", []):
        if "clean_accuracy" in rec:
            lines.append(f"defence {rec['name']:<11} clean-acc {rec['clean_accuracy']:.4f}")
        else:
            lines.append(f"defence {rec['name']:<11} ({rec.get('note', 'skipped')})")
    adv = report.get("adversarial_training")
    if adv:
        lines.append(
            f"adversarial training     robust {adv['baseline_robust_accuracy']:.4f}"
            f" -> {adv['hardened_robust_accuracy']:.4f}"
        )
    det = report.get("detector")
    if det:
        lines.append(f"detector ({det['kind']})        auc {det['auc']:.4f}")
    met = report.get("metrics", {})
    if "empirical_robustness" in met:
        lines.append(f"empirical robustness     {met['empirical_robustness']:.6f}")
    if "loss_sensitivity" in met:
        lines.append(f"loss sensitivity         {met['loss_sensitivity']:.6f}")
    if "clever" in met:
        lines.append(f"clever (mean)            {met['clever']['mean']:.6f}")
    poison = report.get("poison")
    if poison:
        lines.append(
            f"backdoor success         {poison['backdoor_success_before']:.4f}"
            f" -> {poison['backdoor_success_after_repair']:.4f} after repair"
        )
        lines.append(f"poison detection F1      {poison['evaluation']['overall']['f1']:.4f}")
    for failure in report.get("failures", []):
        lines.append(f"FAILED stage {failure['stage']}: {failure['error']}")
    return "\n".join(lines) + "\n"


def write_report(report: dict, timings: dict, out_dir) -> None:
    out = Path(out_dir)
    (out / "report.json").write_text(
        json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / "report.txt").write_text(report_text(report), encoding="utf-8")
    (out / "timings.json").write_text(
        json.dumps(timings, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
