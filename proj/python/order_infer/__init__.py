# Copyright 2026 The order-infer Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Latent generation orders for insertion-based decoders.

Orders are lists of 1-based positions: ``z[t]`` is the target position
generated at step ``t``.
"""

from ._core import (
    CheckpointError,
    Corpus,
    DecoderParams,
    NonFiniteGradient,
    OrderDistribution,
    __version__,
    bethe_permanent_log,
    decode,
    from_matrix,
    gen_data,
    grad_log_q,
    gumbel_sinkhorn,
    hungarian_max,
    joint_log_prob,
    levenshtein,
    log_permanent_exp,
    log_q_density,
    log_sinkhorn,
    nld,
    orc,
    r_to_z,
    read_corpus,
    recover_order,
    run_checks,
    sinkhorn,
    to_matrix,
    train_config,
    z_to_r,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
