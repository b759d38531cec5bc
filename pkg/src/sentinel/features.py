"""Sparse binary session features over namespaced tokens.

Feature families: ``country:``, ``city:``, ``url:`` (individual path
tokens), ``kw:`` (keyword tokens). The vocabulary is explicit, never
hashed, so model weights stay inspectable per token.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import EmptyCorpus, EmptyVocabulary, UnknownSessionId
from .sessionize import UserSession


@dataclass(slots=True)
class Vocabulary:
    token_to_index: dict[str, int]
    dimension: int
    min_df: int

    def digest(self) -> str:
        """Stable hex digest binding models to the vocabulary they were trained on."""
        material = json.dumps(self.token_to_index, sort_keys=True).encode("utf-8")
        return hashlib.sha256(material).hexdigest()


@dataclass(slots=True)
class FeatureVector:
    dimension: int
    active: tuple[int, ...]


@dataclass(slots=True)
class LabeledDataset:
    vectors: list[FeatureVector]
    labels: list[int]
    session_ids: list[str]

    def __len__(self) -> int:
        return len(self.labels)


def session_tokens(session: UserSession) -> set[str]:
    """Distinct namespaced tokens present in one session."""
    tokens = {
        f"country:{session.key.country.lower()}",
        f"city:{session.key.city.lower()}",
    }
    tokens.update(f"url:{t}" for t in session.page_tokens)
    tokens.update(f"kw:{t}" for t in session.keyword_tokens)
    return tokens


def build_vocabulary(sessions: Sequence[UserSession], min_df: int = 1) -> Vocabulary:
    """Collect tokens appearing in at least ``min_df`` sessions, indexed lexicographically."""
    if not sessions:
        raise EmptyCorpus("no sessions to build a vocabulary from")
    df: dict[str, int] = {}
    for session in sessions:
        for token in session_tokens(session):
            df[token] = df.get(token, 0) + 1
    kept = sorted(t for t, n in df.items() if n >= min_df)
    if not kept:
        raise EmptyVocabulary(f"no token appears in >= {min_df} sessions")
    return Vocabulary(
        token_to_index={t: i for i, t in enumerate(kept)},
        dimension=len(kept),
        min_df=min_df,
    )


def vectorize(session: UserSession, vocab: Vocabulary) -> FeatureVector:
    """Binary presence vector; out-of-vocabulary tokens are silently ignored."""
    lookup = vocab.token_to_index
    active = sorted(
        lookup[t] for t in session_tokens(session) if t in lookup
    )
    return FeatureVector(dimension=vocab.dimension, active=tuple(active))


def assemble_dataset(
    sessions: Iterable[UserSession],
    labels: Mapping[str, int],
    vocab: Vocabulary,
) -> LabeledDataset:
    """Vectorize exactly the labeled sessions, ordered by session id."""
    by_id = {s.session_id: s for s in sessions}
    for session_id in labels:
        if session_id not in by_id:
            raise UnknownSessionId(session_id)
    ordered_ids = sorted(labels)
    return LabeledDataset(
        vectors=[vectorize(by_id[sid], vocab) for sid in ordered_ids],
        labels=[int(labels[sid]) for sid in ordered_ids],
        session_ids=ordered_ids,
    )


def vocabulary_to_obj(vocab: Vocabulary) -> dict:
    return {
        "min_df": vocab.min_df,
        "dimension": vocab.dimension,
        "token_to_index": vocab.token_to_index,
    }


def vocabulary_from_obj(obj: Mapping) -> Vocabulary:
    return Vocabulary(
        token_to_index=dict(obj["token_to_index"]),
        dimension=int(obj["dimension"]),
        min_df=int(obj["min_df"]),
    )


def write_dataset_ndjson(dataset: LabeledDataset, stream) -> None:
    for sid, label, vec in zip(dataset.session_ids, dataset.labels, dataset.vectors):
        stream.write(
            json.dumps(
                {
                    "session_id": sid,
                    "label": label,
                    "dimension": vec.dimension,
                    "active_indices": list(vec.active),
                },
                sort_keys=True,
            )
            + "\n"
        )


def read_dataset_ndjson(stream) -> LabeledDataset:
    vectors, labels, ids = [], [], []
    for line in stream:
        if not line.strip():
            continue
        obj = json.loads(line)
        vectors.append(
            FeatureVector(
                dimension=int(obj["dimension"]),
                active=tuple(obj["active_indices"]),
            )
        )
        labels.append(int(obj["label"]))
        ids.append(obj["session_id"])
    return LabeledDataset(vectors=vectors, labels=labels, session_ids=ids)
