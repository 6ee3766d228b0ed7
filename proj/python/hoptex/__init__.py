# Copyright 2026 The hoptex Authors
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

"""Texture synthesis from a single exemplar.

The heavy lifting lives in the compiled ``_hoptex`` extension; this package
re-exports it under a flat namespace.
"""

from ._hoptex import (
    FitError,
    FormatError,
    IoError,
    SamplingError,
    TextureModel,
    closed_form_size,
    extract_patches,
    load_image,
    min_error_cut,
    quilt,
    save_image,
    train,
)

__all__ = [
    "FitError",
    "FormatError",
    "IoError",
    "SamplingError",
    "TextureModel",
    "closed_form_size",
    "extract_patches",
    "load_image",
    "min_error_cut",
    "quilt",
    "save_image",
    "train",
    "synthesize",
]

__version__ = "0.1.0"


def synthesize(model, height=256, width=256, pool=2000, seed=0, threads=1, overlap=0, tolerance=0.1):
    """Generate ``pool`` patches from ``model`` and quilt them into one image."""
    patches = model.generate_patches(pool, seed=seed, threads=threads)
    return quilt(patches, height=height, width=width, overlap=overlap, tolerance=tolerance, seed=seed)
