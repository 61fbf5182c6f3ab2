#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
APK 样本打包

ZIP 容器 + AndroidManifest.xml（AXML 或明文）+ classes*.dex，
可选 v2 签名块（只放证书，不做真实签名）或 META-INF PKCS#7 证书。
"""

import datetime
import io
import struct
import zipfile
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from cryptography import x509
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.serialization import Encoding, pkcs7
from cryptography.x509.oid import NameOID

from permdrift.manifest.signing import APK_SIG_BLOCK_MAGIC, APK_SIGNATURE_SCHEME_V2_BLOCK_ID

from .axml_writer import encode_plaintext

_EOCD_MAGIC = b"PK\x05\x06"


@dataclass(frozen=True)
class SigningKey:
    """自签名证书与私钥"""

    name: str
    certificate: x509.Certificate
    private_key: ec.EllipticCurvePrivateKey

    @property
    def der(self) -> bytes:
        return self.certificate.public_bytes(Encoding.DER)


@lru_cache(maxsize=None)
def make_key(name: str) -> SigningKey:
    """按名字生成（并缓存）一把测试密钥"""
    key = ec.generate_private_key(ec.SECP256R1())
    subject = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, name)])
    start = datetime.datetime(2020, 1, 1, tzinfo=datetime.timezone.utc)
    cert = (
        x509.CertificateBuilder()
        .subject_name(subject)
        .issuer_name(subject)
        .public_key(key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(start)
        .not_valid_after(start + datetime.timedelta(days=3650))
        .sign(key, hashes.SHA256())
    )
    return SigningKey(name=name, certificate=cert, private_key=key)


def _lp(*items: bytes) -> bytes:
    """u32 长度前缀序列"""
    return b"".join(struct.pack("<I", len(x)) + x for x in items)


def v2_scheme_block(cert_der: bytes) -> bytes:
    """signers[ signer[ signed_data[ digests, certificates[cert], attrs ], signatures, pubkey ] ]"""
    signed_data = _lp(b"", _lp(cert_der), b"")
    signer = _lp(signed_data, b"", b"")
    return _lp(_lp(signer))


def signing_block(pairs: Sequence) -> bytes:
    body = b"".join(struct.pack("<QI", len(value) + 4, block_id) + value for block_id, value in pairs)
    size = len(body) + 8 + 16
    return struct.pack("<Q", size) + body + struct.pack("<Q", size) + APK_SIG_BLOCK_MAGIC


def insert_signing_block(zip_bytes: bytes, block: bytes) -> bytes:
    """在中央目录前插入签名块，并修正 EOCD 里的中央目录偏移"""
    eocd = zip_bytes.rfind(_EOCD_MAGIC)
    (cd_offset,) = struct.unpack_from("<I", zip_bytes, eocd + 16)
    out = bytearray(zip_bytes[:cd_offset] + block + zip_bytes[cd_offset:])
    struct.pack_into("<I", out, eocd + len(block) + 16, cd_offset + len(block))
    return bytes(out)


def pkcs7_certificate(key: SigningKey) -> bytes:
    return pkcs7.serialize_certificates([key.certificate], Encoding.DER)


def build_apk(
    manifest: str,
    dex_files: Sequence[bytes] = (),
    key: Optional[SigningKey] = None,
    scheme: str = "v2",
    binary_manifest: bool = True,
    extra: Optional[dict] = None,
) -> bytes:
    """
    打包 APK

    Args:
        manifest: 明文清单
        dex_files: 依次写成 classes.dex, classes2.dex, ...
        key: 签名证书，None 表示不签名
        scheme: v2（签名块）或 meta_inf（PKCS#7 证书文件）
        binary_manifest: 清单是否编码为 AXML
        extra: 额外条目 {名字: 字节}

    Returns:
        APK 字节
    """
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        body = encode_plaintext(manifest) if binary_manifest else manifest.encode("utf-8")
        zf.writestr("AndroidManifest.xml", body)
        for i, dex in enumerate(dex_files):
            zf.writestr(f"classes{i + 1 if i else ''}.dex", dex)
        if key is not None and scheme == "meta_inf":
            zf.writestr("META-INF/CERT.RSA", pkcs7_certificate(key))
        for name, data in (extra or {}).items():
            zf.writestr(name, data)
    data = buf.getvalue()
    if key is not None and scheme == "v2":
        data = insert_signing_block(data, signing_block([(APK_SIGNATURE_SCHEME_V2_BLOCK_ID, v2_scheme_block(key.der))]))
    return data


def manifest_xml(
    package: str,
    version_code: int = 1,
    uses: Sequence[str] = (),
    permissions: Sequence = (),
    providers: Sequence[dict] = (),
    target_sdk: Optional[int] = 30,
) -> str:
    """
    拼一个明文清单

    Args:
        permissions: 权限名，或 (权限名, protectionLevel) 元组
        providers: {name, authorities, permission?, readPermission?, exported?}
    """
    lines = [
        '<?xml version="1.0" encoding="utf-8"?>',
        '<manifest xmlns:android="http://schemas.android.com/apk/res/android"'
        f' package="{package}" android:versionCode="{version_code}">',
    ]
    if target_sdk is not None:
        lines.append(f'  <uses-sdk android:minSdkVersion="21" android:targetSdkVersion="{target_sdk}"/>')
    for perm in permissions:
        if isinstance(perm, tuple):
            name, level = perm
            lines.append(f'  <permission android:name="{name}" android:protectionLevel="{level}"/>')
        else:
            lines.append(f'  <permission android:name="{perm}"/>')
    for name in uses:
        lines.append(f'  <uses-permission android:name="{name}"/>')
    lines.append("  <application>")
    for p in providers:
        attrs = " ".join(
            f'android:{k}="{str(v).lower() if isinstance(v, bool) else v}"' for k, v in p.items()
        )
        lines.append(f"    <provider {attrs}/>")
    lines.append("  </application>")
    lines.append("</manifest>")
    return "\n".join(lines)
