"""Versioned text persistence for every model kind.

The format is line-oriented and diffable:

    skinseg-model 1
    kind <threshold|bayes|tree|mlp>
    seed <int>
    fingerprint <sha256 hex of the canonical training file | none>
    <kind-specific body>

Floating-point values are written with 17 significant digits, which
round-trips IEEE doubles exactly, so load(save(m)) reproduces the
original predictions. Loaders reject unknown versions and kinds.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .classifiers import BayesModel, ThresholdRange, TreeConfig, TreeModel, TreeNode
from .colorspace import YcbcrPixel
from .dataset import RawSample, serialize_uci
from .nn import MlpArchitecture, MlpModel

FORMAT_HEADER = "skinseg-model 1"
KINDS = ("threshold", "bayes", "tree", "mlp")

_ATTR_NAMES = ("h", "s", "v")


@dataclass(frozen=True)
class SavedModel:
    kind: str
    seed: int
    fingerprint: str
    model: object


def dataset_fingerprint(samples: list[RawSample]) -> str:
    """sha256 of the canonical sample serialization (whitespace-insensitive)."""
    return hashlib.sha256(serialize_uci(samples).encode("ascii")).hexdigest()


def model_kind(model) -> str:
    if isinstance(model, ThresholdRange):
        return "threshold"
    if isinstance(model, BayesModel):
        return "bayes"
    if isinstance(model, TreeModel):
        return "tree"
    if isinstance(model, MlpModel):
        return "mlp"
    raise ValueError(f"unknown model type: {type(model).__name__}")


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _threshold_body(box: ThresholdRange) -> list[str]:
    return [
        f"lower {box.lower.y} {box.lower.cr} {box.lower.cb}",
        f"upper {box.upper.y} {box.upper.cr} {box.upper.cb}",
    ]


def _bayes_body(model: BayesModel) -> list[str]:
    lines = [
        f"alpha {_fmt(model.alpha)}",
        f"likelihood_form {model.likelihood_form}",
        f"class_counts {model.class_counts[0]} {model.class_counts[1]}",
    ]
    for attr in range(3):
        for cls, cls_name in enumerate(("skin", "non_skin")):
            row = " ".join(str(int(c)) for c in model.counts[attr, cls])
            lines.append(f"counts {_ATTR_NAMES[attr]} {cls_name} {row}")
    return lines


def _tree_body(model: TreeModel) -> list[str]:
    max_depth = "none" if model.config.max_depth is None else str(model.config.max_depth)
    lines = [
        f"samples {model.n_samples}",
        f"config min_samples_split {model.config.min_samples_split} max_depth {max_depth}",
    ]
    stack = [model.root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            lines.append(f"leaf {node.skin_count} {node.non_skin_count}")
        else:
            lines.append(
                f"split {_ATTR_NAMES[node.attribute]} {_fmt(node.threshold)} "
                f"{node.skin_count} {node.non_skin_count}"
            )
            stack.append(node.right)  # preorder: left is processed first
            stack.append(node.left)
    return lines


def _mlp_body(model: MlpModel) -> list[str]:
    lines = ["hidden_layers " + " ".join(str(w) for w in model.arch.hidden_layers)]
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"weights {l} " + " ".join(_fmt(x) for x in w.ravel()))
        lines.append(f"biases {l} " + " ".join(_fmt(x) for x in b))
    return lines


def model_to_text(model, seed: int, fingerprint: str = "none") -> str:
    kind = model_kind(model)
    body = {
        "threshold": _threshold_body,
        "bayes": _bayes_body,
        "tree": _tree_body,
        "mlp": _mlp_body,
    }[kind](model)
    lines = [FORMAT_HEADER, f"kind {kind}", f"seed {seed}", f"fingerprint {fingerprint}"]
    return "\n".join(lines + body) + "\n"


def _parse_threshold(lines: list[str]) -> ThresholdRange:
    fields = {}
    for ln in lines:
        parts = ln.split()
        if len(parts) != 4 or parts[0] not in ("lower", "upper"):
            raise ValueError(f"malformed threshold line: {ln!r}")
        fields[parts[0]] = YcbcrPixel(int(parts[1]), int(parts[2]), int(parts[3]))
    if set(fields) != {"lower", "upper"}:
        raise ValueError("threshold body must define lower and upper")
    return ThresholdRange(lower=fields["lower"], upper=fields["upper"])


def _parse_bayes(lines: list[str]) -> BayesModel:
    alpha = None
    form = None
    class_counts = None
    counts = np.zeros((3, 2, 256), dtype=np.int64)
    seen = set()
    for ln in lines:
        parts = ln.split()
        if parts[0] == "alpha":
            alpha = float(parts[1])
        elif parts[0] == "likelihood_form":
            form = parts[1]
        elif parts[0] == "class_counts":
            class_counts = np.array([int(parts[1]), int(parts[2])], dtype=np.int64)
        elif parts[0] == "counts":
            attr = _ATTR_NAMES.index(parts[1])
            cls = ("skin", "non_skin").index(parts[2])
            values = [int(v) for v in parts[3:]]
            if len(values) != 256:
                raise ValueError(f"count table needs 256 entries, got {len(values)}")
            counts[attr, cls] = values
            seen.add((attr, cls))
        else:
            raise ValueError(f"unexpected bayes line: {ln!r}")
    if alpha is None or form is None or class_counts is None or len(seen) != 6:
        raise ValueError("incomplete bayes body")
    return BayesModel(
        counts=counts, class_counts=class_counts, alpha=alpha, likelihood_form=form
    )


def _parse_tree(lines: list[str]) -> TreeModel:
    if len(lines) < 3 or not lines[0].startswith("samples ") or not lines[1].startswith("config "):
        raise ValueError("malformed tree body")
    n_samples = int(lines[0].split()[1])
    cfg_parts = lines[1].split()
    min_split = int(cfg_parts[2])
    max_depth = None if cfg_parts[4] == "none" else int(cfg_parts[4])
    config = TreeConfig(min_samples_split=min_split, max_depth=max_depth)

    root = None
    stack = []  # internal nodes still missing a child
    for ln in lines[2:]:
        parts = ln.split()
        if parts[0] == "leaf":
            node = TreeNode(skin_count=int(parts[1]), non_skin_count=int(parts[2]))
        elif parts[0] == "split":
            node = TreeNode(
                skin_count=int(parts[3]),
                non_skin_count=int(parts[4]),
                attribute=_ATTR_NAMES.index(parts[1]),
                threshold=float(parts[2]),
            )
        else:
            raise ValueError(f"unexpected tree line: {ln!r}")
        if root is None:
            root = node
        elif not stack:
            raise ValueError("tree body has extra nodes after the preorder completed")
        else:
            parent = stack[-1]
            if parent.left is None:
                parent.left = node
            else:
                parent.right = node
            while stack and stack[-1].left is not None and stack[-1].right is not None:
                stack.pop()
        if node.attribute is not None:
            stack.append(node)
    if root is None or stack:
        raise ValueError("tree body is incomplete")
    return TreeModel(root=root, config=config, n_samples=n_samples)


def _parse_mlp(lines: list[str]) -> MlpModel:
    if not lines or not lines[0].startswith("hidden_layers "):
        raise ValueError("mlp body must start with hidden_layers")
    hidden = tuple(int(w) for w in lines[0].split()[1:])
    arch = MlpArchitecture(hidden_layers=hidden)
    dims = arch.layer_dims
    weights = [None] * (len(dims) - 1)
    biases = [None] * (len(dims) - 1)
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] not in ("weights", "biases"):
            raise ValueError(f"unexpected mlp line: {ln!r}")
        layer = int(parts[1])
        if not 0 <= layer < len(dims) - 1:
            raise ValueError(f"layer index out of range: {layer}")
        values = np.array([float(v) for v in parts[2:]])
        if parts[0] == "weights":
            expected = dims[layer] * dims[layer + 1]
            if values.size != expected:
                raise ValueError(
                    f"layer {layer} weights need {expected} values, got {values.size}"
                )
            weights[layer] = values.reshape(dims[layer], dims[layer + 1])
        else:
            if values.size != dims[layer + 1]:
                raise ValueError(
                    f"layer {layer} biases need {dims[layer + 1]} values, got {values.size}"
                )
            biases[layer] = values
    if any(w is None for w in weights) or any(b is None for b in biases):
        raise ValueError("incomplete mlp body")
    return MlpModel(arch=arch, weights=weights, biases=biases)


def model_from_text(text: str) -> SavedModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise ValueError(f"unknown model format/version: {lines[:1]!r}")
    header = {}
    for ln in lines[1:4]:
        parts = ln.split(None, 1)
        if len(parts) != 2:
            raise ValueError(f"malformed header line: {ln!r}")
        header[parts[0]] = parts[1].strip()
    for key in ("kind", "seed", "fingerprint"):
        if key not in header:
            raise ValueError(f"model header missing {key}")
    kind = header["kind"]
    if kind not in KINDS:
        raise ValueError(f"unknown model kind: {kind!r}")
    body = lines[4:]
    parser = {
        "threshold": _parse_threshold,
        "bayes": _parse_bayes,
        "tree": _parse_tree,
        "mlp": _parse_mlp,
    }[kind]
    return SavedModel(
        kind=kind, seed=int(header["seed"]), fingerprint=header["fingerprint"],
        model=parser(body),
    )


def save_model(path, model, seed: int, fingerprint: str = "none") -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(model_to_text(model, seed, fingerprint))


def load_model(path) -> SavedModel:
    with open(path, "r", encoding="ascii") as fh:
        return model_from_text(fh.read())
