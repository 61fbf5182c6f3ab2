#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
签名证书摘要
"""

import hashlib
import struct

from permdrift.manifest.extractor import parse_apk
from permdrift.manifest.signing import (
    APK_SIGNATURE_SCHEME_V3_BLOCK_ID,
    cert_digest,
    describe_signing,
    find_signing_block,
)

from tests.support.apk_builder import (
    build_apk,
    insert_signing_block,
    make_key,
    signing_block,
    v2_scheme_block,
)

MANIFEST = '<manifest package="com.signed"/>'


def test_unsigned_apk_has_no_digest():
    apk = build_apk(MANIFEST)
    assert cert_digest(apk) is None
    assert describe_signing(apk) == (None, "unsigned")
    assert parse_apk(apk).cert_digest is None


def test_v2_block_digest_is_certificate_sha256():
    key = make_key("alice")
    apk = build_apk(MANIFEST, key=key)
    expected = hashlib.sha256(key.der).hexdigest()
    assert cert_digest(apk) == expected
    assert describe_signing(apk) == (expected, "signing_block")
    assert parse_apk(apk).cert_digest == expected


def test_same_key_same_digest_different_key_different_digest():
    alice, bob = make_key("alice"), make_key("bob")
    a1 = build_apk(MANIFEST, key=alice)
    a2 = build_apk('<manifest package="com.other"/>', key=alice)
    b = build_apk(MANIFEST, key=bob)
    assert cert_digest(a1) == cert_digest(a2)
    assert cert_digest(a1) != cert_digest(b)


def test_meta_inf_certificate_fallback():
    key = make_key("carol")
    apk = build_apk(MANIFEST, key=key, scheme="meta_inf")
    expected = hashlib.sha256(key.der).hexdigest()
    assert describe_signing(apk) == (expected, "meta_inf")


def test_v3_block_is_read_when_v2_absent():
    key = make_key("dave")
    unsigned = build_apk(MANIFEST)
    apk = insert_signing_block(unsigned, signing_block([(APK_SIGNATURE_SCHEME_V3_BLOCK_ID, v2_scheme_block(key.der))]))
    assert cert_digest(apk) == hashlib.sha256(key.der).hexdigest()
    # 插入签名块后 ZIP 仍然可读
    assert parse_apk(apk).package_name == "com.signed"


def test_corrupted_signing_block_is_ignored():
    key = make_key("erin")
    apk = bytearray(build_apk(MANIFEST, key=key))
    magic_at = apk.find(b"APK Sig Block 42")
    # 尾部尺寸与头部尺寸不一致
    struct.pack_into("<Q", apk, magic_at - 8, 12345)
    assert find_signing_block(bytes(apk)) is None
    assert cert_digest(bytes(apk)) is None
