"""Tests for the synthesis worker pool."""

import threading
import time

import pytest

from isp_dir.data.pool import SynthesisPool, run_parallel


@pytest.fixture
def pool():
    """Create a pool with a small concurrency limit."""
    return SynthesisPool(max_workers=2)


class TestSynthesisPool:
    """Test synthesis pool behaviour."""

    @pytest.mark.asyncio
    async def test_pool_initialization(self):
        """Test the pool starts with zeroed counters."""
        stats = SynthesisPool(max_workers=3).get_pool_stats()
        assert stats == {"max_workers": 3, "submitted": 0, "completed": 0, "failed": 0, "peak_in_flight": 0}

    @pytest.mark.asyncio
    async def test_default_workers_from_config(self, set_env_vars):
        """Test max_workers defaults to ISP_DIR_WORKERS."""
        set_env_vars(ISP_DIR_WORKERS="5")
        assert SynthesisPool().get_pool_stats()["max_workers"] == 5

    @pytest.mark.asyncio
    async def test_results_in_input_order(self, pool):
        """Test results come back in input order regardless of finish order."""

        def slow_square(x: int) -> int:
            time.sleep(0.01 * (5 - x))
            return x * x

        assert await pool.map(slow_square, [0, 1, 2, 3, 4]) == [0, 1, 4, 9, 16]

    @pytest.mark.asyncio
    async def test_concurrency_bounded(self, pool):
        """Test no more than max_workers tasks run at once."""
        lock = threading.Lock()
        active = [0]
        peak = [0]

        def work(_: int) -> None:
            with lock:
                active[0] += 1
                peak[0] = max(peak[0], active[0])
            time.sleep(0.02)
            with lock:
                active[0] -= 1

        await pool.map(work, list(range(8)))
        assert peak[0] <= 2
        stats = pool.get_pool_stats()
        assert stats["peak_in_flight"] <= 2
        assert stats["submitted"] == 8
        assert stats["completed"] == 8

    @pytest.mark.asyncio
    async def test_failure_propagates(self, pool):
        """Test a failing task raises and is counted."""

        def fail_on_two(x: int) -> int:
            if x == 2:
                raise ValueError("boom")
            return x

        with pytest.raises(ValueError, match="boom"):
            await pool.map(fail_on_two, [0, 1, 2, 3])
        assert pool.get_pool_stats()["failed"] == 1


class TestRunParallel:
    """Tests for the synchronous wrapper."""

    def test_run_parallel(self):
        """Test run_parallel() maps synchronously."""
        assert run_parallel(str, [1, 2, 3], max_workers=2) == ["1", "2", "3"]
