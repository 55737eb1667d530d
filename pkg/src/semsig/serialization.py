"""File formats: model container, debug text dump, signature and dataset files.

Model container (magic `SEMSIG01`): little-endian u32 dims d, m, B, c,
then the anchor matrix (m x d), the kernel width, the projection
(m x B), and the classifier (B x c), all as little-endian float64 in row
order. A knowledge-base section may follow: u32 item count, ids as u64,
labels as u32, signatures as one signed byte per bit. Absence of the
section just means the file ends after the classifier.

Signature text files hold `id<TAB>label<TAB>bitstring` per line, where
the bitstring maps 0 to -1 and 1 to +1.

Datasets travel either as CSV (label first, features after) or packed
binary (magic `SEMSIGD1`: u32 n, d, k, float64 features, u32 labels).

Text formats print floats with 17 significant digits, which round-trips
float64 exactly.
"""

import io

import numpy as np

from .encoder import HashModel
from .kernels import AnchorSet
from .retrieval import KnowledgeBase
from .validation import as_float_matrix, as_label_vector, as_signature_matrix

MODEL_MAGIC = b"SEMSIG01"
DATASET_MAGIC = b"SEMSIGD1"


def _read_exact(fh, count, path, what):
    data = fh.read(count)
    if len(data) != count:
        raise ValueError(f"{path}: truncated file while reading {what}")
    return data


def _read_u32(fh, count, path, what):
    return np.frombuffer(_read_exact(fh, 4 * count, path, what), dtype="<u4").astype(np.int64)


def _read_f64(fh, shape, path, what):
    count = int(np.prod(shape))
    flat = np.frombuffer(_read_exact(fh, 8 * count, path, what), dtype="<f8")
    return flat.reshape(shape).copy()


def save_model(path, model, kb=None):
    """Write a model container, optionally with an embedded knowledge base."""
    anchors = model.anchor_set.anchors
    m, d = anchors.shape
    B = model.projection.shape[1]
    c = model.classifier.shape[1]
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(np.array([d, m, B, c], dtype="<u4").tobytes())
        fh.write(anchors.astype("<f8").tobytes())
        fh.write(np.array([model.anchor_set.width], dtype="<f8").tobytes())
        fh.write(model.projection.astype("<f8").tobytes())
        fh.write(model.classifier.astype("<f8").tobytes())
        if kb is not None:
            if kb.code_bits != B:
                raise ValueError(
                    f"knowledge base code length {kb.code_bits} != model code length {B}"
                )
            fh.write(np.array([len(kb)], dtype="<u4").tobytes())
            fh.write(kb.ids.astype("<u8").tobytes())
            fh.write(kb.labels.astype("<u4").tobytes())
            fh.write(kb.codes.astype(np.int8).tobytes())


def load_model(path, with_kb=False):
    """Read a model container; with_kb=True also returns the embedded base.

    Returns the model alone, or (model, kb-or-None) when with_kb is set.
    """
    with open(path, "rb") as fh:
        magic = fh.read(len(MODEL_MAGIC))
        if magic != MODEL_MAGIC:
            raise ValueError(f"{path}: not a model container (bad magic {magic!r})")
        d, m, B, c = (int(v) for v in _read_u32(fh, 4, path, "dimensions"))
        anchors = _read_f64(fh, (m, d), path, "anchors")
        width = float(_read_f64(fh, (1,), path, "width")[0])
        projection = _read_f64(fh, (m, B), path, "projection")
        classifier = _read_f64(fh, (B, c), path, "classifier")
        model = HashModel(
            anchor_set=AnchorSet(anchors=anchors, width=width),
            projection=projection,
            classifier=classifier,
            classes=np.arange(c, dtype=np.int64),
            config={},
        )
        if not with_kb:
            return model
        head = fh.read(4)
        if not head:
            return model, None
        if len(head) != 4:
            raise ValueError(f"{path}: truncated file while reading base item count")
        n = int(np.frombuffer(head, dtype="<u4")[0])
        ids = np.frombuffer(_read_exact(fh, 8 * n, path, "base ids"), dtype="<u8")
        labels = np.frombuffer(_read_exact(fh, 4 * n, path, "base labels"), dtype="<u4")
        codes = np.frombuffer(_read_exact(fh, n * B, path, "base signatures"), dtype=np.int8)
        kb = KnowledgeBase(
            codes.reshape(n, B).astype(np.float64),
            labels.astype(np.int64),
            ids=ids.astype(np.int64),
        )
        return model, kb


def save_model_text(path, model):
    """Lossless line-oriented dump of a model, for eyeballing and diffing."""
    anchors = model.anchor_set.anchors
    m, d = anchors.shape
    B = model.projection.shape[1]
    c = model.classifier.shape[1]
    buf = io.StringIO()
    buf.write("SEMSIG01-TEXT\n")
    buf.write(f"dims {d} {m} {B} {c}\n")
    buf.write(f"width {model.anchor_set.width:.17g}\n")
    for name, mat in (("anchor", anchors), ("proj", model.projection), ("clf", model.classifier)):
        for row in mat:
            buf.write(name + " " + " ".join(f"{v:.17g}" for v in row) + "\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def load_model_text(path):
    """Read back a text model dump."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != "SEMSIG01-TEXT":
        raise ValueError(f"{path}: not a text model dump")
    try:
        d, m, B, c = (int(v) for v in lines[1].split()[1:])
        width = float(lines[2].split()[1])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed header") from exc
    rows = {"anchor": [], "proj": [], "clf": []}
    for lineno, line in enumerate(lines[3:], start=4):
        if not line.strip():
            continue
        name, _, rest = line.partition(" ")
        if name not in rows:
            raise ValueError(f"{path}:{lineno}: unknown row kind {name!r}")
        rows[name].append([float(v) for v in rest.split()])
    anchors = np.array(rows["anchor"], dtype=np.float64).reshape(m, d)
    projection = np.array(rows["proj"], dtype=np.float64).reshape(m, B)
    classifier = np.array(rows["clf"], dtype=np.float64).reshape(B, c)
    return HashModel(
        anchor_set=AnchorSet(anchors=anchors, width=width),
        projection=projection,
        classifier=classifier,
        classes=np.arange(c, dtype=np.int64),
        config={},
    )


def signature_to_bitstring(sig):
    return "".join("1" if v > 0 else "0" for v in np.asarray(sig))


def bitstring_to_signature(text):
    if not text or any(ch not in "01" for ch in text):
        raise ValueError(f"bad bitstring {text!r}; expected characters 0 and 1")
    return np.array([1 if ch == "1" else -1 for ch in text], dtype=np.int8)


def save_signatures_text(path, codes, labels, ids=None):
    """Write `id<TAB>label<TAB>bitstring` rows."""
    codes = as_signature_matrix(codes, "codes")
    labels = as_label_vector(labels, name="labels")
    if ids is None:
        ids = np.arange(codes.shape[0], dtype=np.int64)
    with open(path, "w", encoding="utf-8") as fh:
        for i, (label, row) in enumerate(zip(labels, codes)):
            fh.write(f"{int(ids[i])}\t{int(label)}\t{signature_to_bitstring(row)}\n")


def load_signatures_text(path):
    """Read signature rows; returns (codes int8, labels, ids)."""
    ids, labels, rows = [], [], []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
                )
            try:
                ids.append(int(parts[0]))
                labels.append(int(parts[1]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad id or label") from exc
            sig = bitstring_to_signature(parts[2])
            if width is None:
                width = sig.size
            elif sig.size != width:
                raise ValueError(
                    f"{path}:{lineno}: bitstring length {sig.size} != {width} seen earlier"
                )
            rows.append(sig)
    if not rows:
        raise ValueError(f"{path}: no signature rows found")
    return (
        np.vstack(rows),
        np.array(labels, dtype=np.int64),
        np.array(ids, dtype=np.int64),
    )


def save_kb_text(path, kb):
    save_signatures_text(path, kb.codes, kb.labels, ids=kb.ids)


def load_kb_text(path):
    codes, labels, ids = load_signatures_text(path)
    return KnowledgeBase(codes.astype(np.float64), labels, ids=ids)


def save_dataset(path, X, y, n_classes=None):
    """Write features and labels in the packed binary dataset format."""
    X = as_float_matrix(X, "X")
    y = as_label_vector(y, name="y")
    if y.size != X.shape[0]:
        raise ValueError("X and y disagree on sample count")
    k = int(n_classes) if n_classes is not None else int(y.max()) + 1
    if np.any(y >= k):
        raise ValueError(f"labels exceed the declared class count {k}")
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(np.array([X.shape[0], X.shape[1], k], dtype="<u4").tobytes())
        fh.write(X.astype("<f8").tobytes())
        fh.write(y.astype("<u4").tobytes())


def _load_dataset_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(DATASET_MAGIC))
        if magic != DATASET_MAGIC:
            raise ValueError(f"{path}: not a packed dataset (bad magic {magic!r})")
        n, d, k = (int(v) for v in _read_u32(fh, 3, path, "dimensions"))
        X = _read_f64(fh, (n, d), path, "features")
        y = np.frombuffer(_read_exact(fh, 4 * n, path, "labels"), dtype="<u4").astype(np.int64)
    if np.any(y >= k):
        bad = int(y[np.argmax(y >= k)])
        raise ValueError(f"{path}: label {bad} outside [0, {k})")
    return X, y, k


def _load_dataset_csv(path):
    rows, labels = [], []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if len(cells) < 2:
                raise ValueError(f"{path}:{lineno}: need a label and at least one feature")
            try:
                label = int(cells[0])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad label {cells[0]!r}") from exc
            if label < 0:
                raise ValueError(f"{path}:{lineno}: negative label {label}")
            try:
                feats = [float(v) for v in cells[1:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric feature cell") from exc
            if width is None:
                width = len(feats)
            elif len(feats) != width:
                raise ValueError(
                    f"{path}:{lineno}: expected {width} features, got {len(feats)}"
                )
            labels.append(label)
            rows.append(feats)
    if not rows:
        raise ValueError(f"{path}: no data rows found")
    X = np.array(rows, dtype=np.float64)
    y = np.array(labels, dtype=np.int64)
    return X, y, int(y.max()) + 1


def load_features(path, format="csv"):
    """Read a dataset; returns (features, labels, class count)."""
    if format == "csv":
        return _load_dataset_csv(path)
    if format in ("packed", "packed-binary", "binary"):
        return _load_dataset_binary(path)
    raise ValueError(f"unknown dataset format {format!r}; use csv or packed")


def save_features_csv(path, X, y):
    """Write a dataset as CSV with the label in the first column."""
    X = as_float_matrix(X, "X")
    y = as_label_vector(y, name="y")
    with open(path, "w", encoding="utf-8") as fh:
        for label, row in zip(y, X):
            fh.write(str(int(label)) + "," + ",".join(f"{v:.17g}" for v in row) + "\n")
