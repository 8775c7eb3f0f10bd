import itertools
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sahm.chip import (
    ChipConfig,
    CoreSpec,
    Specialization,
    canonical_config,
    design_space_size,
    enumerate_design_space,
    load_chip,
    realistic_config,
    write_chip,
)


def signature(chip):
    return tuple((c.specialization, c.speedup) for c in chip.cores)


class TestDesignSpace:
    def test_three_levels(self):
        configs = enumerate_design_space([0.1, 0.2, 0.3])
        assert len(configs) == 256
        assert configs[0].name == "B" and len(configs[0].cores) == 1

    def test_single_level(self):
        assert len(enumerate_design_space([0.3])) == 16

    def test_empty(self):
        with pytest.raises(ValueError):
            enumerate_design_space([])

    def test_independent_count(self):
        # count (subset, assignment) pairs directly rather than via the closed form
        levels = [0.1, 0.2, 0.3]
        n = 1
        for k in range(1, 5):
            for _ in itertools.combinations(range(4), k):
                n += len(list(itertools.product(levels, repeat=k)))
        assert n == 256

    @given(levels=st.sets(st.sampled_from([0.0, 0.05, 0.1, 0.2, 0.3, 0.5]), min_size=1, max_size=4))
    def test_size_formula_and_uniqueness(self, levels):
        configs = enumerate_design_space(levels)
        L = len(levels)
        assert len(configs) == 1 + sum(math.comb(4, k) * L**k for k in range(1, 5)) == design_space_size(L)
        assert len({signature(c) for c in configs}) == len(configs)
        assert len({c.name for c in configs}) == len(configs)
        for c in configs[1:]:
            specs = [x.specialization for x in c.cores[1:]]
            assert c.cores[0].is_baseline and len(set(specs)) == len(specs)

    def test_names(self):
        names = [c.name for c in enumerate_design_space([0.3])]
        assert names[:5] == ["B", "B+Br30", "B+L1I30", "B+L1D30", "B+L2_30"]
        assert names[-1] == "B+Br30+L1I30+L1D30+L2_30"


class TestPresets:
    def test_canonical(self):
        c = canonical_config([0.3] * 4)
        assert [x.specialization for x in c.cores] == [None, *Specialization]
        assert all(x.speedup == 0.3 for x in c.cores[1:])
        assert canonical_config([0.1, 0.3, 0.3, 0.3]).cores[1].speedup == 0.1

    def test_realistic(self):
        c = realistic_config(8, 7, 0.3)
        assert len(c) == 39 and c.name == "7xB+8xBr30+8xL1I30+8xL1D30+8xL2_30"
        assert len(realistic_config(0, 1, 0.5)) == 1
        assert signature(realistic_config(1, 1, 0.3)) == signature(canonical_config(0.3))
        with pytest.raises(ValueError):
            realistic_config(0, 0, 0.3)

    def test_load_presets_and_json(self, tmp_path):
        assert len(load_chip("realistic39")) == 39
        chip = load_chip("canonical30")
        p = tmp_path / "chip.json"
        write_chip(chip, p)
        assert signature(load_chip(p)) == signature(chip)
        p.write_text(json.dumps([{"specialization": "l2", "speedup": 0.5, "count": 2},
                                 {"specialization": "baseline"}]))
        c = load_chip(p)
        assert [x.specialization for x in c.cores] == [Specialization.L2, Specialization.L2, None]

    @pytest.mark.parametrize("payload, msg", [
        ({"a": 1}, "list"),
        ([{"specialization": "fpu"}], "unknown specialization"),
        ([{"specialization": "l2", "count": 1.5}], "count"),
        ([{"specialization": "baseline", "speedup": 0.2}], "baseline"),
    ])
    def test_bad_json(self, tmp_path, payload, msg):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(payload))
        with pytest.raises(ValueError, match=msg):
            load_chip(p)


class TestCoreSpec:
    def test_invariants(self):
        with pytest.raises(ValueError):
            CoreSpec(0, None, 0.1)
        with pytest.raises(ValueError):
            CoreSpec(0, Specialization.L2, -0.1)
        assert CoreSpec(0, Specialization.L2, 0.0).rate == 1.0

    def test_dense_ids(self):
        with pytest.raises(ValueError):
            ChipConfig("x", (CoreSpec(1),))
        with pytest.raises(ValueError):
            ChipConfig("x", ())
