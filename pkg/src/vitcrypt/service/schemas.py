"""Pydantic request/response models for the HTTP service.

Images travel as base64-encoded binary PPM (P6) or PGM (P5) bytes, the
same lossless interchange format the CLI reads and writes, so a service
round-trip is byte-exact.
"""

from pydantic import BaseModel, Field


class KeygenRequest(BaseModel):
    seed: int = Field(ge=0)
    m: int
    height: int
    width: int


class KeyResponse(BaseModel):
    key: str  # VITCRYPT-KEY text format


class KeyspaceRequest(BaseModel):
    m: int
    height: int
    width: int


class KeyspaceResponse(BaseModel):
    count: str  # exact decimal, as text (can run to thousands of digits)
    bits: int
    n_blocks: int
    subblock_size: int


class CipherRequest(BaseModel):
    key: str
    image: str  # base64 PPM/PGM bytes


class ImageResponse(BaseModel):
    image: str


class ImagePairRequest(BaseModel):
    image_a: str
    image_b: str


class SsimResponse(BaseModel):
    score: float
    display: str  # fixed 3-decimal rendering


class LeakageResponse(BaseModel):
    ssim: float
    histogram_preserved: list[bool]
    mean_abs_diff: float


class VitCheckRequest(BaseModel):
    seed: int = 0
    m: int = 8
    channels: int = 3
    dim: int = 64
    heads: int = 4
    depth: int = 2
    n_patches: int = 16
    trials: int = Field(default=20, ge=1, le=200)
    invariance_tol: float = 1e-5
    embedding_tol: float = 1e-6
    forward_tol: float = 1e-5
    control_min: float = 1e-2


class VitCheckResponse(BaseModel):
    invariance_off: float
    invariance_copermuted: float
    control_fixed_positions: float
    embedding_dev: float
    forward_dev: float
    wrong_key_dev: float
    passed: bool
