import numpy as np

from risklab import rng


class TestKeyDerivation:
    def test_distinct_inputs_distinct_keys(self):
        keys = {
            rng.derive_key(*parts).tobytes()
            for parts in ((1, "a"), (1, "b"), (2, "a"), ("1", "a", ""), (12, "a"))
        }
        assert len(keys) == 5

    def test_generator_reproducible(self):
        a = rng.generator(7, "stream").random(16)
        b = rng.generator(7, "stream").random(16)
        assert np.array_equal(a, b)


class TestUniformRows:
    def test_rows_independent_of_chunking(self):
        key = rng.derive_key(3, "tag")
        full = rng.uniform_rows(key, 0, 12, 10)
        parts = np.vstack(
            [
                rng.uniform_rows(key, 0, 5, 10),
                rng.uniform_rows(key, 5, 3, 10),
                rng.uniform_rows(key, 8, 4, 10),
            ]
        )
        assert np.array_equal(full, parts)

    def test_row_lengths_pad_to_counter_ticks(self):
        key = rng.derive_key(9, "tag")
        for row_len in (1, 2, 3, 4, 5, 7, 16000):
            a = rng.uniform_rows(key, 2, 2, row_len)
            b = rng.uniform_rows(key, 3, 1, row_len)
            assert a.shape == (2, row_len)
            assert np.array_equal(a[1], b[0])

    def test_empty_shapes(self):
        key = rng.derive_key(1)
        assert rng.uniform_rows(key, 0, 0, 5).shape == (0, 5)
        assert rng.uniform_rows(key, 0, 3, 0).shape == (3, 0)

    def test_values_in_unit_interval(self):
        key = rng.derive_key("u")
        u = rng.uniform_rows(key, 0, 4, 100)
        assert u.min() >= 0.0 and u.max() < 1.0
