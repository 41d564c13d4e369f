"""Scenario files: INI-style sections of ``key = value`` lines.

Example::

    [layout]
    preset = six_node              ; or: file = nodes.csv  /  nodes = 0,20,150; 1,60,40

    [radio]
    tx_power_dbm = 0
    bandwidth_hz = 20e6
    noise_density_dbm_hz = -172
    path_loss_index = 5
    fading_margin_bps = 0

    [optimizer]
    lambda_target = 0.8
    model_bits = auto           ; auto = 32 bits per model parameter
    allow_isolation = false
    mutual_links = false

    [training]
    learning_rate = 0.01
    batch_size = 1
    epochs = 10
    seed = 0
    model = logistic_regression ; or mlp(32,16)
    loss = cross_entropy
    compute_seconds_per_iteration = 0.001
    measure_compute = false
    accuracy_threshold = 0.8

    [data]
    source = synthetic          ; or csv (then path = ..., label_column = label)
    samples_per_node = 1000
    test_samples = 1000
    features = 20
    classes = 10
    separation = 0.8
    seed = 0

    [sweep]
    lambda_target = 0.1, 0.3, 0.8
    path_loss_index = 3, 4, 5, 6

    [bound]
    lipschitz = 1
    variance = 1
    learning_rate = 0.01
    f_initial = 1
    f_inf = 0
    iterations = inf
    node_count = 6
    points = 100

    [output]
    dir = results

Only ``[layout]`` and ``[optimizer] lambda_target`` are required.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..bound import INFINITE_ITERATIONS, BoundParams
from ..dpsgd.data import Dataset, gaussian_clusters, load_csv, split
from ..dpsgd.engine import TrainingConfig
from ..dpsgd.models import LOSSES, ModelSpec, build_model
from ..optimizer import OptimizerConfig
from ..propagation import DomainError, NodeLayout, RadioParams, layout_from_rows, six_node_layout


class ScenarioError(ValueError):
    pass


KNOWN_KEYS = {
    "layout": {"preset", "file", "nodes"},
    "radio": {"tx_power_dbm", "bandwidth_hz", "noise_density_dbm_hz", "path_loss_index", "fading_margin_bps"},
    "optimizer": {"lambda_target", "model_bits", "allow_isolation", "mutual_links"},
    "training": {
        "learning_rate",
        "batch_size",
        "epochs",
        "seed",
        "model",
        "loss",
        "iterations_per_epoch",
        "compute_seconds_per_iteration",
        "measure_compute",
        "accuracy_threshold",
    },
    "data": {
        "source",
        "path",
        "label_column",
        "samples_per_node",
        "test_samples",
        "test_fraction",
        "features",
        "classes",
        "separation",
        "seed",
    },
    "sweep": {"lambda_target", "path_loss_index"},
    "bound": {
        "lipschitz",
        "variance",
        "beta",
        "learning_rate",
        "f_initial",
        "f_inf",
        "iterations",
        "node_count",
        "points",
    },
    "output": {"dir"},
}


@dataclass(frozen=True)
class DataConfig:
    source: str = "synthetic"
    path: Path | None = None
    label_column: str = "label"
    samples_per_node: int = 1000
    test_samples: int = 1000
    test_fraction: float = 0.0
    features: int = 20
    classes: int = 10
    separation: float = 0.8
    seed: int = 0

    def load(self, n_nodes: int) -> tuple[Dataset, Dataset | None]:
        if self.source == "csv":
            data = load_csv(self.path, self.label_column)
            if self.test_fraction > 0:
                return split(data, self.test_fraction, self.seed)
            return data, None
        total = n_nodes * self.samples_per_node + self.test_samples
        data = gaussian_clusters(total, self.features, self.classes, self.separation, self.seed)
        if self.test_samples:
            return split(data, self.test_samples / total, self.seed)
        return data, None

    def shape(self) -> tuple[int, int]:
        """(features, classes) without generating synthetic data."""
        if self.source == "csv":
            d = load_csv(self.path, self.label_column)
            return d.n_features, d.n_classes
        return self.features, self.classes


@dataclass(frozen=True)
class ScenarioConfig:
    layout: NodeLayout
    radio: RadioParams
    optimizer: OptimizerConfig
    training: TrainingConfig
    data: DataConfig = DataConfig()
    bound: BoundParams = BoundParams()
    bound_points: int = 100
    sweep_lambda_targets: tuple[float, ...] | None = None
    sweep_path_loss_indices: tuple[float, ...] | None = None
    accuracy_threshold: float = 0.8
    output_dir: Path = Path("results")
    source_text: str = field(default="", compare=False, repr=False)

    def cells(self, use_sweep: bool = True) -> list[tuple[float, float]]:
        lts = (self.sweep_lambda_targets if use_sweep else None) or (self.optimizer.lambda_target,)
        eps = (self.sweep_path_loss_indices if use_sweep else None) or (self.radio.path_loss_index,)
        return [(lt, e) for lt in lts for e in eps]

    def with_overrides(
        self,
        seed: int | None = None,
        out: str | Path | None = None,
        lambda_targets=None,
        epsilons=None,
    ) -> "ScenarioConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, training=replace(cfg.training, seed=int(seed)))
        if out is not None:
            cfg = replace(cfg, output_dir=Path(out))
        if lambda_targets:
            lts = tuple(float(v) for v in lambda_targets)
            for v in lts:
                _check_target(v)
            cfg = replace(cfg, sweep_lambda_targets=lts, optimizer=replace(cfg.optimizer, lambda_target=lts[0]))
        if epsilons:
            eps = tuple(float(v) for v in epsilons)
            cfg = replace(
                cfg, sweep_path_loss_indices=eps, radio=cfg.radio.with_path_loss_index(eps[0])
            )
        return cfg


def _check_target(v: float) -> None:
    if not 0.0 <= v < 1.0:
        raise ScenarioError(f"lambda_target values must lie in [0, 1), got {v}")


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"^([A-Za-z_][\w\-]*)\s*[=:]", line)
        if m and section is not None and not raw[:1].isspace():
            lines[(section, m.group(1).lower())] = no
    return lines


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, lines, origin: str):
        self.p = parser
        self.lines = lines
        self.origin = origin

    def where(self, section: str, key: str | None = None) -> str:
        if key is not None and (section, key) in self.lines:
            return f"{self.origin}:{self.lines[(section, key)]}"
        return f"{self.origin} [{section}]"

    def fail(self, section: str, key: str | None, msg: str):
        raise ScenarioError(f"{self.where(section, key)}: {msg}")

    def has(self, section: str, key: str) -> bool:
        return self.p.has_option(section, key)

    def raw(self, section: str, key: str, default=None):
        if not self.has(section, key):
            return default
        return self.p.get(section, key).strip()

    def number(self, section: str, key: str, default, cast=float):
        v = self.raw(section, key)
        if v is None:
            return default
        try:
            if cast is int:
                return int(float(v)) if re.fullmatch(r"[+-]?\d+(\.0*)?([eE]\+?\d+)?", v) else int(v)
            return float(v)
        except ValueError:
            self.fail(section, key, f"{key} = {v!r} is not a valid {cast.__name__}")

    def flag(self, section: str, key: str, default: bool) -> bool:
        v = self.raw(section, key)
        if v is None:
            return default
        low = v.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        self.fail(section, key, f"{key} = {v!r} is not a boolean")

    def number_list(self, section: str, key: str):
        v = self.raw(section, key)
        if v is None:
            return None
        try:
            vals = tuple(float(t) for t in re.split(r"[,\s]+", v) if t)
        except ValueError:
            self.fail(section, key, f"{key} = {v!r} is not a list of numbers")
        if not vals:
            self.fail(section, key, f"{key} must not be empty")
        return vals


def parse_scenario(text: str, origin: str = "<string>", base_dir: Path | None = None) -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ScenarioError(f"{origin}: {exc}") from None
    r = _Reader(parser, _key_lines(text), origin)
    base_dir = base_dir or Path(".")

    for section in parser.sections():
        if section not in KNOWN_KEYS:
            r.fail(section, None, f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in KNOWN_KEYS[section]:
                r.fail(section, key, f"unknown key {key!r} in [{section}]")

    layout = _layout(r, base_dir)

    try:
        radio = RadioParams(
            tx_power=r.number("radio", "tx_power_dbm", 0.0),
            bandwidth=r.number("radio", "bandwidth_hz", 20e6),
            noise_density=r.number("radio", "noise_density_dbm_hz", -172.0),
            path_loss_index=r.number("radio", "path_loss_index", 3.0),
            fading_margin=r.number("radio", "fading_margin_bps", 0.0),
        )
    except DomainError as exc:
        key = {"bandwidth": "bandwidth_hz", "path_loss_index": "path_loss_index", "fading_margin": "fading_margin_bps"}
        bad = next((v for k, v in key.items() if k in str(exc)), None)
        r.fail("radio", bad, str(exc))

    if not r.has("optimizer", "lambda_target"):
        r.fail("optimizer", None, "missing required key lambda_target")

    data_cfg = _data(r, base_dir)
    training = _training(r)

    bits_raw = r.raw("optimizer", "model_bits", "auto")
    if bits_raw.lower() == "auto":
        feats, classes = data_cfg.shape()
        model_bits = 32.0 * build_model(training.model, feats, classes).size
    else:
        model_bits = r.number("optimizer", "model_bits", None)
    try:
        optimizer = OptimizerConfig(
            lambda_target=r.number("optimizer", "lambda_target", None),
            model_bits=model_bits,
            allow_isolation=r.flag("optimizer", "allow_isolation", False),
            mutual_links=r.flag("optimizer", "mutual_links", False),
        )
    except DomainError as exc:
        bad = "lambda_target" if "lambda_target" in str(exc) else "model_bits"
        r.fail("optimizer", bad, str(exc))

    lts = r.number_list("sweep", "lambda_target")
    for v in lts or ():
        if not 0.0 <= v < 1.0:
            r.fail("sweep", "lambda_target", f"lambda_target values must lie in [0, 1), got {v}")
    eps = r.number_list("sweep", "path_loss_index")
    for v in eps or ():
        if not v > 0:
            r.fail("sweep", "path_loss_index", f"path_loss_index values must be > 0, got {v}")

    bound = _bound(r)
    points = r.number("bound", "points", 100, int)
    if points < 1:
        r.fail("bound", "points", "points must be >= 1")

    threshold = r.number("training", "accuracy_threshold", 0.8)
    if not 0.0 < threshold <= 1.0:
        r.fail("training", "accuracy_threshold", "accuracy_threshold must lie in (0, 1]")

    out = Path(r.raw("output", "dir", "results"))
    return ScenarioConfig(
        layout=layout,
        radio=radio,
        optimizer=optimizer,
        training=training,
        data=data_cfg,
        bound=bound,
        bound_points=points,
        sweep_lambda_targets=lts,
        sweep_path_loss_indices=eps,
        accuracy_threshold=threshold,
        output_dir=out if out.is_absolute() else base_dir / out,
        source_text=text,
    )


def _layout(r: _Reader, base_dir: Path) -> NodeLayout:
    if not r.p.has_section("layout"):
        raise ScenarioError(f"{r.origin}: missing required section [layout]")
    given = [k for k in ("preset", "file", "nodes") if r.has("layout", k)]
    if len(given) != 1:
        r.fail("layout", None, "give exactly one of preset, file, nodes")
    key = given[0]
    try:
        if key == "preset":
            name = r.raw("layout", "preset").lower()
            if name != "six_node":
                r.fail("layout", "preset", f"unknown preset {name!r}; available: six_node")
            return six_node_layout()
        if key == "file":
            path = base_dir / r.raw("layout", "file")
            if not path.exists():
                r.fail("layout", "file", f"layout file {path} does not exist")
            return read_layout_csv(path)
        text = r.raw("layout", "nodes")
        rows = [[float(v) for v in chunk.split(",")] for chunk in re.split(r"[;\n]", text) if chunk.strip()]
        if any(len(row) != 3 for row in rows):
            r.fail("layout", "nodes", "each node needs 'id, x, y'")
        return layout_from_rows(rows)
    except (DomainError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        r.fail("layout", key, str(exc))


def _data(r: _Reader, base_dir: Path) -> DataConfig:
    source = r.raw("data", "source", "synthetic").lower()
    if source not in ("synthetic", "csv"):
        r.fail("data", "source", f"source must be synthetic or csv, got {source!r}")
    path = None
    if source == "csv":
        if not r.has("data", "path"):
            r.fail("data", None, "source = csv needs path")
        path = base_dir / r.raw("data", "path")
        if not path.exists():
            r.fail("data", "path", f"data file {path} does not exist")
    cfg = DataConfig(
        source=source,
        path=path,
        label_column=r.raw("data", "label_column", "label"),
        samples_per_node=r.number("data", "samples_per_node", 1000, int),
        test_samples=r.number("data", "test_samples", 1000, int),
        test_fraction=r.number("data", "test_fraction", 0.0),
        features=r.number("data", "features", 20, int),
        classes=r.number("data", "classes", 10, int),
        separation=r.number("data", "separation", 0.8),
        seed=r.number("data", "seed", 0, int),
    )
    for key, ok in (
        ("samples_per_node", cfg.samples_per_node >= 1),
        ("test_samples", cfg.test_samples >= 0),
        ("test_fraction", 0.0 <= cfg.test_fraction < 1.0),
        ("features", cfg.features >= 1),
        ("classes", cfg.classes >= 2),
        ("separation", cfg.separation >= 0),
    ):
        if not ok:
            r.fail("data", key, f"invalid value for {key}")
    return cfg


def _training(r: _Reader) -> TrainingConfig:
    loss = r.raw("training", "loss", "cross_entropy")
    if loss not in LOSSES:
        r.fail("training", "loss", f"loss must be one of {LOSSES}, got {loss!r}")
    try:
        model = ModelSpec.parse(r.raw("training", "model", "logistic_regression"))
    except ValueError as exc:
        r.fail("training", "model", str(exc))
    ipe = r.number("training", "iterations_per_epoch", None, int)
    try:
        return TrainingConfig(
            learning_rate=r.number("training", "learning_rate", 0.01),
            batch_size=r.number("training", "batch_size", 1, int),
            epochs=r.number("training", "epochs", 10, int),
            seed=r.number("training", "seed", 0, int),
            model=model,
            loss=loss,
            iterations_per_epoch=ipe,
            compute_seconds_per_iteration=r.number("training", "compute_seconds_per_iteration", 1e-3),
            measure_compute=r.flag("training", "measure_compute", False),
        )
    except ValueError as exc:
        bad = next((k for k in KNOWN_KEYS["training"] if str(exc).startswith(k)), None)
        r.fail("training", bad, str(exc))


def _bound(r: _Reader) -> BoundParams:
    it = r.raw("bound", "iterations", "inf")
    if it.lower() in ("inf", "infinity"):
        iterations = INFINITE_ITERATIONS
    else:
        iterations = r.number("bound", "iterations", None, int)
    try:
        return BoundParams(
            lipschitz=r.number("bound", "lipschitz", 1.0),
            variance=r.number("bound", "variance", 1.0),
            beta=r.number("bound", "beta", 0.0),
            learning_rate=r.number("bound", "learning_rate", 0.01),
            f_initial=r.number("bound", "f_initial", 1.0),
            f_inf=r.number("bound", "f_inf", 0.0),
            iterations=iterations,
            node_count=r.number("bound", "node_count", 6, int),
        )
    except DomainError as exc:
        r.fail("bound", None, str(exc))


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    return parse_scenario(text, origin=str(path), base_dir=path.parent)


def read_layout_csv(path: str | Path) -> NodeLayout:
    """CSV with header ``id,x,y`` (meters)."""
    import csv

    with open(path, newline="") as fh:
        rows = [(int(row["id"]), float(row["x"]), float(row["y"])) for row in csv.DictReader(fh)]
    return NodeLayout.from_nodes(rows, label=str(path))


def default_scenario() -> ScenarioConfig:
    return parse_scenario("[layout]\npreset = six_node\n[optimizer]\nlambda_target = 0.8\n", origin="<default>")

