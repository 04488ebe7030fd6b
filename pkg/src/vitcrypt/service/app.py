"""FastAPI service exposing the toolkit's stateless operations.

Run with `vitcrypt serve` or `uvicorn vitcrypt.service.app:app`. Every
endpoint is a pure function of its request body; malformed keys, images,
or geometry come back as HTTP 400 with the validation message.
"""

import base64
import binascii

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..image import FormatError, load_ppm, save_ppm
from ..keys import KeyFormatError, generate_key, parse_key, serialize_key
from ..keyspace import keyspace, keyspace_bits
from ..metrics import leakage_report, ssim
from ..cipher import decrypt, encrypt
from ..vit import run_equivariance_suite
from .schemas import (
    CipherRequest,
    ImagePairRequest,
    ImageResponse,
    KeyResponse,
    KeygenRequest,
    KeyspaceRequest,
    KeyspaceResponse,
    LeakageResponse,
    SsimResponse,
    VitCheckRequest,
    VitCheckResponse,
)

app = FastAPI(title="vitcrypt", version=__version__)


def _decode_image(field: str, payload: str) -> np.ndarray:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError):
        raise HTTPException(400, f"{field}: invalid base64") from None
    try:
        return load_ppm(raw)
    except FormatError as exc:
        raise HTTPException(400, f"{field}: {exc}") from None


def _encode_image(img: np.ndarray) -> str:
    return base64.b64encode(save_ppm(img)).decode("ascii")


def _parse_key(text: str):
    try:
        return parse_key(text)
    except KeyFormatError as exc:
        raise HTTPException(400, f"key: {exc}") from None


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/keygen", response_model=KeyResponse)
def keygen(req: KeygenRequest):
    try:
        key = generate_key(req.seed, req.m, req.height, req.width)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from None
    return KeyResponse(key=serialize_key(key))


@app.post("/keyspace", response_model=KeyspaceResponse)
def keyspace_info(req: KeyspaceRequest):
    try:
        count = keyspace(req.m, req.height, req.width)
        bits = keyspace_bits(req.m, req.height, req.width)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from None
    return KeyspaceResponse(
        count=str(count),
        bits=bits,
        n_blocks=(req.height // req.m) * (req.width // req.m),
        subblock_size=(req.m // 2) ** 2,
    )


@app.post("/encrypt", response_model=ImageResponse)
def encrypt_image(req: CipherRequest):
    key = _parse_key(req.key)
    img = _decode_image("image", req.image)
    try:
        return ImageResponse(image=_encode_image(encrypt(img, key)))
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from None


@app.post("/decrypt", response_model=ImageResponse)
def decrypt_image(req: CipherRequest):
    key = _parse_key(req.key)
    img = _decode_image("image", req.image)
    try:
        return ImageResponse(image=_encode_image(decrypt(img, key)))
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from None


@app.post("/ssim", response_model=SsimResponse)
def ssim_pair(req: ImagePairRequest):
    a = _decode_image("image_a", req.image_a)
    b = _decode_image("image_b", req.image_b)
    try:
        score = ssim(a, b)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from None
    return SsimResponse(score=score, display=f"{score:.3f}")


@app.post("/leakage", response_model=LeakageResponse)
def leakage_pair(req: ImagePairRequest):
    plain = _decode_image("image_a", req.image_a)
    processed = _decode_image("image_b", req.image_b)
    try:
        report = leakage_report(plain, processed)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from None
    return LeakageResponse(
        ssim=report.ssim,
        histogram_preserved=list(report.histogram_preserved),
        mean_abs_diff=report.mean_abs_diff,
    )


@app.post("/vit/check", response_model=VitCheckResponse)
def vit_check(req: VitCheckRequest):
    try:
        report = run_equivariance_suite(
            seed=req.seed, m=req.m, channels=req.channels, dim=req.dim,
            heads=req.heads, depth=req.depth, n_patches=req.n_patches,
            trials=req.trials,
        )
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from None
    return VitCheckResponse(
        invariance_off=report.invariance_off,
        invariance_copermuted=report.invariance_copermuted,
        control_fixed_positions=report.control_fixed_positions,
        embedding_dev=report.embedding_dev,
        forward_dev=report.forward_dev,
        wrong_key_dev=report.wrong_key_dev,
        passed=report.passes(
            req.invariance_tol, req.embedding_tol, req.forward_tol, req.control_min
        ),
    )
