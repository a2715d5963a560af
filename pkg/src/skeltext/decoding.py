"""Stage 2 inference: constraint-masked iterative refinement from a skeleton."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .data import BOS_TOKEN, EOS_TOKEN, PLH_TOKEN, Table
from .editor import EditRealizer, EditState
from .encoder import EncoderOutput
from .oracle import DELETE

FIXED_POINT = "fixed_point"
MAX_ITERATIONS = "max_iterations"


class StateOverflowError(RuntimeError):
    """The edit state outgrew the hard length cap; decoding is aborted."""


@dataclass
class DecodeTrace:
    snapshots: list[EditState]
    termination: str
    iterations: int

    def __post_init__(self):
        if len(self.snapshots) != self.iterations + 1:
            raise ValueError("trace must hold the initial state plus one snapshot per iteration")


def init_state(skeleton, protect_skeleton: bool = True) -> EditState:
    """Wrap the skeleton in sentinels; under hard constraints everything is protected."""
    tokens = (BOS_TOKEN, *skeleton, EOS_TOKEN)
    protected = (True, *(protect_skeleton for _ in skeleton), True)
    return EditState(tokens, protected)


def masked_delete(state: EditState, deletion_probs: np.ndarray) -> EditState:
    """Drop unprotected positions whose delete probability wins; keep the rest.

    Protected positions (sentinels included) are forced to "keep" no matter
    what the classifier says. Mask entries of the survivors carry over.
    """
    if deletion_probs.shape[0] != len(state):
        raise ValueError(
            f"{deletion_probs.shape[0]} deletion rows for a state of {len(state)} tokens"
        )
    keep = [
        prot or int(np.argmax(deletion_probs[i])) != DELETE
        for i, prot in enumerate(state.protected)
    ]
    tokens = tuple(t for t, k in zip(state.tokens, keep) if k)
    protected = tuple(p for p, k in zip(state.protected, keep) if k)
    return EditState(tokens, protected, state.iteration)


def insert_and_fill(
    state: EditState, model: EditRealizer, enc: EncoderOutput, max_state_len: int = 512
) -> EditState:
    """Argmax placeholder insertion followed by argmax token filling.

    Inserted tokens enter unprotected. Growth beyond max_state_len aborts
    with StateOverflowError rather than decode forever.
    """
    with ag.no_grad():
        z = model.decode_hidden(state.tokens, enc)
        counts = np.argmax(model.placeholder_scores(z).data, axis=-1)
        if counts.sum() + len(state) > max_state_len:
            raise StateOverflowError(
                f"state would grow to {int(counts.sum()) + len(state)} tokens (cap {max_state_len})"
            )
        tokens: list[str] = [state.tokens[0]]
        protected: list[bool] = [True]
        for slot, count in enumerate(counts):
            tokens.extend([PLH_TOKEN] * int(count))
            protected.extend([False] * int(count))
            tokens.append(state.tokens[slot + 1])
            protected.append(state.protected[slot + 1])
        plh_positions = [i for i, t in enumerate(tokens) if t == PLH_TOKEN]
        if plh_positions:
            z2 = model.decode_hidden(tokens, enc)
            for pos, tok in zip(plh_positions, model.argmax_fill(z2, plh_positions)):
                tokens[pos] = tok
    return EditState(tuple(tokens), tuple(protected), state.iteration)


def iterate(
    model: EditRealizer,
    table: Table,
    skeleton,
    max_iter: int = 10,
    hard_constraints: bool = True,
    max_state_len: int = 512,
) -> tuple[list[str], DecodeTrace]:
    """Alternate masked deletion and insertion until the text stops changing.

    Returns the final tokens (sentinels stripped) and the full trace. Each
    iteration re-decodes the state from scratch; termination is either a
    fixed point or the iteration cap.
    """
    state = init_state(skeleton, protect_skeleton=hard_constraints)
    snapshots = [state]
    termination = MAX_ITERATIONS
    with ag.no_grad():
        enc = model.encode(table)
        for step in range(1, max_iter + 1):
            previous = state.tokens
            z = model.decode_hidden(state.tokens, enc)
            state = masked_delete(state, model.deletion_scores(z).data)
            state = insert_and_fill(state, model, enc, max_state_len)
            state = state.advanced(iteration=step)
            snapshots.append(state)
            if state.tokens == previous:
                termination = FIXED_POINT
                break
    trace = DecodeTrace(snapshots, termination, len(snapshots) - 1)
    return list(state.body()), trace
