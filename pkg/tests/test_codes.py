import itertools

import numpy as np
import pytest
from scipy import stats

from grandlab.codes import (
    GF2mField,
    LinearCode,
    PolarCrcCode,
    bch_generator_poly,
    build_bch_127_113,
    build_polar_crc,
    build_toy_code,
    crc_remainder,
    hamming_7_4,
    load_code,
    polar_transform,
    random_linear_code,
    repetition_code,
    save_code,
)
from grandlab.codes.gf2m import BCH_127_PRIMITIVE_POLY, gf2_poly_degree, gf2_poly_divmod
from grandlab.errors import FileFormatError, InvalidParameterError


def oracle_gf2_rank(mat: np.ndarray) -> int:
    """Independent row-reduction over GF(2) on a dense copy."""
    m = np.array(mat, dtype=np.int64) % 2
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivots = [r for r in range(rank, rows) if m[r, c]]
        if not pivots:
            continue
        m[[rank, pivots[0]]] = m[[pivots[0], rank]]
        for r in range(rows):
            if r != rank and m[r, c]:
                m[r] = (m[r] + m[rank]) % 2
        rank += 1
    return rank


class TestLinearBasics:
    @pytest.mark.parametrize("code_fn", [hamming_7_4, lambda: repetition_code(5),
                                         lambda: random_linear_code(10, 5, 3)])
    def test_zero_word_is_member(self, code_fn):
        code = code_fn()
        assert code.contains(np.zeros(code.n, dtype=np.uint8))

    def test_encode_linearity(self):
        code = hamming_7_4()
        rng = np.random.default_rng(0)
        for _ in range(50):
            u1 = rng.integers(0, 2, 4, dtype=np.uint8)
            u2 = rng.integers(0, 2, 4, dtype=np.uint8)
            assert np.array_equal(code.encode(u1) ^ code.encode(u2), code.encode(u1 ^ u2))

    def test_encode_members(self):
        code = random_linear_code(12, 6, 9)
        rng = np.random.default_rng(1)
        for _ in range(50):
            assert code.contains(code.random_codeword(rng))

    def test_syndrome_linearity(self):
        code = hamming_7_4()
        rng = np.random.default_rng(2)
        for _ in range(50):
            a = rng.integers(0, 2, 7, dtype=np.uint8)
            b = rng.integers(0, 2, 7, dtype=np.uint8)
            assert np.array_equal(code.syndrome(a ^ b), code.syndrome(a) ^ code.syndrome(b))

    def test_packed_matches_naive(self):
        for code in (hamming_7_4(), build_bch_127_113(), repetition_code(9)):
            rng = np.random.default_rng(4)
            for _ in range(100):
                w = rng.integers(0, 2, code.n, dtype=np.uint8)
                s = code.syndrome(w)
                packed = int("".join(map(str, s[::-1])), 2) if s.any() else 0
                assert code.packed_syndrome(w) == packed

    def test_membership_matches_exhaustive_codebook(self):
        for code in (hamming_7_4(), random_linear_code(10, 5, 7)):
            members = {tuple(c) for c in code.all_codewords()}
            assert len(members) == 1 << code.k
            for word in itertools.product((0, 1), repeat=code.n):
                assert code.contains(np.array(word, dtype=np.uint8)) == (word in members)

    def test_length_mismatch_rejected(self):
        code = hamming_7_4()
        with pytest.raises(InvalidParameterError):
            code.contains(np.zeros(6, dtype=np.uint8))
        with pytest.raises(InvalidParameterError):
            code.encode(np.zeros(5, dtype=np.uint8))


class TestToyCodes:
    def test_hamming_distance_3(self):
        words = hamming_7_4().all_codewords()
        assert len(words) == 16
        dmin = min(
            int((words[i] ^ words[j]).sum())
            for i in range(16)
            for j in range(i + 1, 16)
        )
        assert dmin == 3

    def test_repetition_members(self):
        code = repetition_code(3)
        members = sorted(tuple(c) for c in code.all_codewords())
        assert members == [(0, 0, 0), (1, 1, 1)]

    def test_random_linear_full_rank(self):
        code = random_linear_code(10, 5, 2024)
        assert oracle_gf2_rank(code.generator) == 5
        assert oracle_gf2_rank(code.parity_check) == 5

    def test_spec_strings(self):
        assert build_toy_code("hamming74").n == 7
        assert build_toy_code("repetition:4").n == 4
        assert build_toy_code("random_linear:12,6,1").k == 6
        with pytest.raises(InvalidParameterError):
            build_toy_code("mystery")

    def test_random_codeword_uniform_chi_square(self):
        code = hamming_7_4()
        rng = np.random.default_rng(11)
        draws = 10**4
        counts = {}
        for _ in range(draws):
            cw = tuple(code.random_codeword(rng))
            counts[cw] = counts.get(cw, 0) + 1
        # chi-square oracle over the 16 cells
        observed = np.array([counts.get(tuple(c), 0) for c in code.all_codewords()])
        chi2 = ((observed - draws / 16) ** 2 / (draws / 16)).sum()
        assert chi2 < stats.chi2.ppf(0.9999, df=15)

    def test_random_codeword_deterministic(self):
        code = hamming_7_4()
        a = code.random_codeword(np.random.default_rng(5))
        b = code.random_codeword(np.random.default_rng(5))
        assert np.array_equal(a, b)


class TestBch:
    def test_generator_degree_14(self):
        field = GF2mField(7, BCH_127_PRIMITIVE_POLY)
        g = bch_generator_poly(field)
        assert gf2_poly_degree(g) == 14
        code = build_bch_127_113()
        assert (code.n, code.k) == (127, 113)

    def test_generator_divides_x127_plus_1(self):
        # polynomial-division oracle over GF(2)
        field = GF2mField(7, BCH_127_PRIMITIVE_POLY)
        g = bch_generator_poly(field)
        x127_1 = (1 << 127) | 1
        _, rem = gf2_poly_divmod(x127_1, g)
        assert rem == 0

    def test_cyclic_shifts_stay_members(self):
        code = build_bch_127_113()
        rng = np.random.default_rng(3)
        for _ in range(10**3):
            w = code.random_codeword(rng)
            k = int(rng.integers(1, 127))
            assert code.contains(np.roll(w, k))

    def test_primitivity_validation(self):
        with pytest.raises(InvalidParameterError):
            GF2mField(4, 0b11111)  # x^4+x^3+x^2+x+1 divides x^5-1: not primitive


class TestPolarTransform:
    def test_involution(self):
        rng = np.random.default_rng(8)
        for n in (2, 8, 64, 128):
            v = rng.integers(0, 2, n, dtype=np.uint8)
            assert np.array_equal(polar_transform(polar_transform(v)), v)

    def test_zero_maps_to_zero(self):
        assert not polar_transform(np.zeros(16, dtype=np.uint8)).any()

    def test_n2_cases(self):
        assert polar_transform(np.array([1, 0], dtype=np.uint8)).tolist() == [1, 0]
        assert polar_transform(np.array([0, 1], dtype=np.uint8)).tolist() == [1, 1]

    def test_matches_dense_kron_oracle(self):
        f = np.array([[1, 0], [1, 1]], dtype=np.uint8)
        mat = f
        for _ in range(3):
            mat = np.kron(mat, f) % 2
        rng = np.random.default_rng(9)
        for _ in range(20):
            v = rng.integers(0, 2, 16, dtype=np.uint8)
            assert np.array_equal(polar_transform(v), (v @ mat) % 2)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(InvalidParameterError):
            polar_transform(np.zeros(6, dtype=np.uint8))


class TestCrc:
    def test_zero_message(self):
        assert not crc_remainder(np.zeros(20, dtype=np.uint8), 0x633).any()

    def test_systematic_property(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            msg = rng.integers(0, 2, 30, dtype=np.uint8)
            rem = crc_remainder(msg, 0x633)
            assert not crc_remainder(np.concatenate([msg, rem]), 0x633).any()

    def test_specific_message_against_long_division_oracle(self):
        msg = np.array([1, 0, 1, 1, 0, 0, 1, 1], dtype=np.uint8)
        poly = 0x633

        def oracle(bits, p):
            # plain schoolbook long division on integer polynomials
            val = 0
            for b in bits:
                val = (val << 1) | int(b)
            val <<= 10
            deg_p = p.bit_length() - 1
            while val.bit_length() - 1 >= deg_p and val:
                val ^= p << (val.bit_length() - 1 - deg_p)
            return np.array([(val >> (9 - i)) & 1 for i in range(10)], dtype=np.uint8)

        assert np.array_equal(crc_remainder(msg, poly), oracle(msg, poly))


@pytest.fixture(scope="module")
def polar_code():
    return build_polar_crc()


class TestPolarCrcCode:
    @pytest.fixture()
    def code(self, polar_code):
        return polar_code

    def test_label_arithmetic(self, code):
        assert (code.n, code.k, code.payload_len, code.crc_len) == (128, 114, 104, 10)
        assert len(code.info_positions) == 114
        assert len(code.frozen_positions) == 14

    def test_zero_payload_zero_codeword(self, code):
        assert not code.encode(np.zeros(104, dtype=np.uint8)).any()

    def test_random_encodes_pass_contains(self, code):
        rng = np.random.default_rng(12)
        for _ in range(10**3):
            assert code.contains(code.random_codeword(rng))

    def test_structural_matches_packed(self, code):
        lin = code.equivalent_linear()
        rng = np.random.default_rng(13)
        for _ in range(300):
            w = rng.integers(0, 2, 128, dtype=np.uint8)
            assert code.contains(w) == lin.contains(w)
        for _ in range(100):
            cw = code.random_codeword(rng)
            assert code.contains(cw) and lin.contains(cw)

    def test_weight_one_errors_detected(self, code):
        lin = code.equivalent_linear()
        rng = np.random.default_rng(14)
        for _ in range(100):
            cw = code.random_codeword(rng)
            for pos in range(128):
                bad = cw.copy()
                bad[pos] ^= 1
                assert not lin.contains(bad)

    def test_design_snr_affects_frozen_set(self):
        a = build_polar_crc(design_snr_db=0.0)
        b = build_polar_crc(design_snr_db=6.0)
        assert a.n == b.n == 128


class TestCodeFiles:
    def test_linear_round_trip(self, tmp_path):
        for code in (hamming_7_4(), build_bch_127_113()):
            path = tmp_path / f"{code.name}.code"
            save_code(code, path)
            back = load_code(path)
            assert isinstance(back, LinearCode)
            assert np.array_equal(back.generator, code.generator)
            assert np.array_equal(back.parity_check, code.parity_check)
            save_code(back, tmp_path / "again.code")
            assert (tmp_path / f"{code.name}.code").read_bytes() == (tmp_path / "again.code").read_bytes()

    def test_polar_round_trip(self, tmp_path):
        code = build_polar_crc()
        path = tmp_path / "polar.code"
        save_code(code, path)
        back = load_code(path)
        assert isinstance(back, PolarCrcCode)
        assert np.array_equal(back.info_positions, code.info_positions)
        assert back.crc_poly == code.crc_poly
        rng = np.random.default_rng(15)
        payload = rng.integers(0, 2, 104, dtype=np.uint8)
        assert np.array_equal(back.encode(payload), code.encode(payload))

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.code"
        path.write_text("NOTCODE v1 type=linear n=7 k=4\n")
        with pytest.raises(FileFormatError):
            load_code(path)
