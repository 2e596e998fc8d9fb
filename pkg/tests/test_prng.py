import numpy as np
import pytest

MASK = (1 << 64) - 1


def splitmix_reference(counter):
    """Straight-line SplitMix64 step written out independently of core.prng."""
    counter = (counter + 0x9E3779B97F4A7C15) & MASK
    z = counter
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31), counter


def test_rng_new_keeps_seed_as_state():
    from core.prng import rng_new

    assert rng_new(205).state == 205
    assert rng_new(0).state == 0


def test_first_output_from_zero_matches_published_value():
    from core.prng import rng_new, rng_next_u64

    value, state = rng_next_u64(rng_new(0))
    assert value == 0xE220A8397B1DCDAF
    assert state.state == 0x9E3779B97F4A7C15


@pytest.mark.parametrize("seed", [0, 205, MASK, 0x0123456789ABCDEF])
def test_scalar_step_matches_reference(seed):
    from core.prng import rng_new, rng_next_u64

    state = rng_new(seed)
    counter = seed
    for _ in range(50):
        value, state = rng_next_u64(state)
        expected, counter = splitmix_reference(counter)
        assert value == expected
        assert state.state == counter


def test_step_is_pure():
    from core.prng import RngState, rng_next_u64

    state = RngState(205)
    assert rng_next_u64(state) == rng_next_u64(state)


def test_equal_seeds_give_equal_streams():
    from core.prng import draw_u64, rng_new

    a, _ = draw_u64(rng_new(205), 10_000)
    b, _ = draw_u64(rng_new(205), 10_000)
    assert np.array_equal(a, b)


def test_block_draw_matches_scalar_steps():
    from core.prng import draw_u64, rng_new, rng_next_u64

    block, block_state = draw_u64(rng_new(205), 1000)
    state = rng_new(205)
    scalar = []
    for _ in range(1000):
        value, state = rng_next_u64(state)
        scalar.append(value)
    assert [int(v) for v in block] == scalar
    assert block_state == state


def test_block_indices_match_scalar_indices():
    from core.prng import draw_indices, rng_bounded_index, rng_new

    block, block_state = draw_indices(rng_new(7), 37, 500)
    state = rng_new(7)
    scalar = []
    for _ in range(500):
        index, state = rng_bounded_index(state, 37)
        scalar.append(index)
    assert block.tolist() == scalar
    assert block_state == state


def test_bound_one_always_zero():
    from core.prng import draw_indices, rng_bounded_index, rng_new

    index, _ = rng_bounded_index(rng_new(99), 1)
    assert index == 0
    block, _ = draw_indices(rng_new(99), 1, 1000)
    assert not block.any()


def test_bounded_index_consumes_exactly_one_step():
    from core.prng import rng_bounded_index, rng_new, rng_next_u64

    for bound in (1, 2, 10, 1000, 2 ** 40):
        _, after_index = rng_bounded_index(rng_new(205), bound)
        _, after_step = rng_next_u64(rng_new(205))
        assert after_index == after_step


def test_zero_bound_is_a_domain_error():
    from core.errors import DomainError
    from core.prng import draw_indices, rng_bounded_index, rng_new

    with pytest.raises(DomainError):
        rng_bounded_index(rng_new(1), 0)
    with pytest.raises(DomainError):
        draw_indices(rng_new(1), 0, 10)


def test_indices_are_uniform_within_five_sigma():
    from core.prng import draw_indices, rng_new

    bound, draws = 16, 100_000
    indices, _ = draw_indices(rng_new(205), bound, draws)
    counts = np.bincount(indices, minlength=bound)
    p = 1.0 / bound
    sigma = np.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) <= 5 * sigma)


def test_synchronized_states_give_identical_index_sequences():
    from core.prng import draw_indices, rng_new

    bounds = [3, 100, 7, 100_000]
    a_state = rng_new(205)
    b_state = rng_new(205)
    for bound in bounds:
        a, a_state = draw_indices(a_state, bound, 100)
        b, b_state = draw_indices(b_state, bound, 100)
        assert np.array_equal(a, b)


def test_rank_substreams_are_deterministic_and_distinct():
    from core.prng import rank_substream, rng_new

    assert rank_substream(205, 3) == rank_substream(205, 3)
    states = {rank_substream(205, r).state for r in range(1024)}
    assert len(states) == 1024
    assert rank_substream(205, 0) != rng_new(205)


def test_rank_substream_derivation():
    from core.prng import rank_substream

    salted = 205 ^ ((1 * 0x9E3779B97F4A7C15) & MASK)
    mixed, _ = splitmix_reference(salted)
    assert rank_substream(205, 0).state == mixed


def test_negative_rank_rejected():
    from core.errors import DomainError
    from core.prng import rank_substream

    with pytest.raises(DomainError):
        rank_substream(205, -1)


def test_advance_skips_steps():
    from core.prng import advance, draw_u64, rng_new

    full, _ = draw_u64(rng_new(11), 10)
    tail, _ = draw_u64(advance(rng_new(11), 4), 6)
    assert np.array_equal(full[4:], tail)


def test_uniform_doubles_stay_in_open_interval():
    from core.prng import uniform_doubles, rng_new

    u, _ = uniform_doubles(rng_new(205), 50_000)
    assert u.min() > 0.0
    assert u.max() < 1.0


def test_standard_normal_moments_and_length():
    from core.prng import rng_new, standard_normal

    z, _ = standard_normal(rng_new(205), 100_001)
    assert z.shape == (100_001,)
    assert abs(z.mean()) < 0.02
    assert abs(z.var() - 1.0) < 0.02


def test_standard_normal_consumes_pairs():
    from core.prng import advance, rng_new, standard_normal

    _, odd_state = standard_normal(rng_new(3), 5)
    assert odd_state == advance(rng_new(3), 6)
