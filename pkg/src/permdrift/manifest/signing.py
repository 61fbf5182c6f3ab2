#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
签名证书摘要

优先读取 APK Signing Block（v2 → v3 → v3.1）中第一个签名者的第一张证书；
没有签名块时回退到 META-INF/*.RSA|DSA|EC 的 PKCS#7 证书。
两者都没有时返回 None，不抛异常。
"""

import hashlib
import io
import logging
import re
import struct
import zipfile
from typing import Dict, Iterator, Optional, Tuple

from cryptography.hazmat.primitives.serialization import Encoding
from cryptography.hazmat.primitives.serialization.pkcs7 import (
    load_der_pkcs7_certificates,
)

logger = logging.getLogger("permdrift.manifest.signing")

APK_SIG_BLOCK_MAGIC = b"APK Sig Block 42"
APK_SIGNATURE_SCHEME_V2_BLOCK_ID = 0x7109871A
APK_SIGNATURE_SCHEME_V3_BLOCK_ID = 0xF05368C0
APK_SIGNATURE_SCHEME_V31_BLOCK_ID = 0x1B93AD61
_SCHEME_ORDER = (
    APK_SIGNATURE_SCHEME_V2_BLOCK_ID,
    APK_SIGNATURE_SCHEME_V3_BLOCK_ID,
    APK_SIGNATURE_SCHEME_V31_BLOCK_ID,
)

_EOCD_MAGIC = b"PK\x05\x06"
_EOCD_MIN_SIZE = 22
_META_INF_CERT = re.compile(r"^META-INF/[^/]+\.(RSA|DSA|EC)$", re.IGNORECASE)


class _BlockError(Exception):
    pass


def _find_central_directory(data: bytes) -> Optional[int]:
    """定位 EOCD 并返回中央目录偏移"""
    search_from = max(0, len(data) - (_EOCD_MIN_SIZE + 0xFFFF))
    eocd = data.rfind(_EOCD_MAGIC, search_from)
    if eocd < 0 or eocd + _EOCD_MIN_SIZE > len(data):
        return None
    (cd_offset,) = struct.unpack_from("<I", data, eocd + 16)
    return cd_offset


def find_signing_block(data: bytes) -> Optional[Dict[int, bytes]]:
    """
    解析 APK Signing Block 为 {block_id: value}

    Returns:
        没有签名块时返回 None
    """
    cd_offset = _find_central_directory(data)
    if cd_offset is None or cd_offset < 32 or cd_offset > len(data):
        return None
    footer = data[cd_offset - 24 : cd_offset]
    size_in_footer, magic = struct.unpack("<Q16s", footer)
    if magic != APK_SIG_BLOCK_MAGIC:
        return None
    block_start = cd_offset - (size_in_footer + 8)
    if block_start < 0:
        return None
    (size_in_header,) = struct.unpack_from("<Q", data, block_start)
    if size_in_header != size_in_footer:
        return None

    pairs: Dict[int, bytes] = {}
    pos = block_start + 8
    end = cd_offset - 24
    while pos + 12 <= end:
        (length,) = struct.unpack_from("<Q", data, pos)
        if length < 4 or pos + 8 + length > end:
            return None
        (block_id,) = struct.unpack_from("<I", data, pos + 8)
        pairs.setdefault(block_id, data[pos + 12 : pos + 8 + length])
        pos += 8 + length
    return pairs


def _length_prefixed(buf: bytes) -> Iterator[bytes]:
    """u32 长度前缀序列"""
    pos = 0
    while pos < len(buf):
        if pos + 4 > len(buf):
            raise _BlockError("长度前缀被截断")
        (n,) = struct.unpack_from("<I", buf, pos)
        if pos + 4 + n > len(buf):
            raise _BlockError("元素被截断")
        yield buf[pos + 4 : pos + 4 + n]
        pos += 4 + n


def _first(buf: bytes) -> bytes:
    for item in _length_prefixed(buf):
        return item
    raise _BlockError("空序列")


def first_signer_certificate(scheme_block: bytes) -> bytes:
    """v2/v3 方案块 -> 第一个签名者的第一张 DER 证书"""
    signers = _first(scheme_block)
    signer = _first(signers)
    signed_data = _first(signer)
    parts = _length_prefixed(signed_data)
    next(parts)  # digests
    certificates = next(parts)
    return _first(certificates)


def _digest_from_signing_block(data: bytes) -> Optional[str]:
    pairs = find_signing_block(data)
    if not pairs:
        return None
    for scheme in _SCHEME_ORDER:
        if scheme not in pairs:
            continue
        try:
            cert = first_signer_certificate(pairs[scheme])
        except (_BlockError, StopIteration, struct.error) as e:
            logger.debug(f"签名块解析失败 scheme=0x{scheme:08x}: {e}")
            continue
        return hashlib.sha256(cert).hexdigest()
    return None


def _digest_from_meta_inf(data: bytes) -> Optional[str]:
    try:
        with zipfile.ZipFile(io.BytesIO(data)) as zf:
            names = sorted(n for n in zf.namelist() if _META_INF_CERT.match(n))
            for name in names:
                try:
                    certs = load_der_pkcs7_certificates(zf.read(name))
                except ValueError as e:
                    logger.debug(f"PKCS#7 解析失败 {name}: {e}")
                    continue
                if certs:
                    der = certs[0].public_bytes(Encoding.DER)
                    return hashlib.sha256(der).hexdigest()
    except zipfile.BadZipFile:
        return None
    return None


def cert_digest(apk_bytes: bytes) -> Optional[str]:
    """
    签名证书 SHA-256

    Args:
        apk_bytes: APK 原始字节

    Returns:
        十六进制摘要；未签名返回 None
    """
    data = bytes(apk_bytes)
    return _digest_from_signing_block(data) or _digest_from_meta_inf(data)


def describe_signing(apk_bytes: bytes) -> Tuple[Optional[str], str]:
    """(摘要, 来源)，来源为 signing_block / meta_inf / unsigned"""
    data = bytes(apk_bytes)
    digest = _digest_from_signing_block(data)
    if digest:
        return digest, "signing_block"
    digest = _digest_from_meta_inf(data)
    if digest:
        return digest, "meta_inf"
    return None, "unsigned"
