import math

import pytest

from aklt_hqmm.core.check import CheckStatus, CheckSuite, FunctionCheck, SuitePolicy


def failing():
    raise RuntimeError("boom")


class TestFunctionCheck:
    def test_pass_and_fail(self):
        ok = FunctionCheck("ok", lambda: 1e-12, 1e-9)
        bad = FunctionCheck("bad", lambda: 1e-3, 1e-9)
        assert ok.run() == CheckStatus.PASSED
        assert bad.run() == CheckStatus.FAILED
        assert bad.result.deviation == pytest.approx(1e-3)
        assert bad.result.tolerance == 1e-9

    def test_detail_is_merged_with_properties(self):
        check = FunctionCheck("detail", lambda: (0.0, {"value": 3}), 1e-9, properties={"note": "x"})
        check.run()
        assert check.result.detail == {"note": "x", "value": 3}

    def test_require_above(self):
        assert FunctionCheck("gap", lambda: 0.5, 1e-3, require_above=True).run() == CheckStatus.PASSED
        assert FunctionCheck("gap", lambda: 0.0, 1e-3, require_above=True).run() == CheckStatus.FAILED

    def test_nan_fails(self):
        assert FunctionCheck("nan", lambda: math.nan, 1.0).run() == CheckStatus.FAILED

    def test_exception_is_captured(self):
        check = FunctionCheck("raises", failing, 1.0)
        assert check.run() == CheckStatus.ERROR
        assert "RuntimeError: boom" in check.result.error
        assert check.metadata.error_count == 1

    def test_precondition_skips(self):
        check = FunctionCheck("skipped", lambda: 0.0, 1.0, preconditions=[lambda: False])
        assert check.run() == CheckStatus.SKIPPED
        assert check.metadata.total_runs == 0

    def test_metadata_counts_runs(self):
        check = FunctionCheck("twice", lambda: 0.0, 1.0)
        check.run()
        check.run()
        assert check.metadata.total_runs == 2
        assert check.metadata.passed_count == 2
        assert check.metadata.last_status == CheckStatus.PASSED


class TestCheckSuite:
    def build(self, policy):
        suite = CheckSuite("root", policy)
        child = CheckSuite("group")
        child.add_child(FunctionCheck("first", lambda: 0.0, 1.0))
        child.add_child(FunctionCheck("second", lambda: 2.0, 1.0))
        suite.add_child(child).add_child(FunctionCheck("third", lambda: 0.0, 1.0))
        return suite

    def test_paths(self):
        suite = self.build(SuitePolicy.CONTINUE_ON_FAILURE)
        suite.run()
        assert [r.path for r in suite.results()] == [
            "root", "root/group", "root/group/first", "root/group/second", "root/third"
        ]

    def test_continue_on_failure_runs_everything(self):
        suite = self.build(SuitePolicy.CONTINUE_ON_FAILURE)
        assert suite.run() == CheckStatus.FAILED
        assert suite.children[1].status == CheckStatus.PASSED

    def test_require_all_stops(self):
        suite = self.build(SuitePolicy.REQUIRE_ALL)
        assert suite.run() == CheckStatus.FAILED
        assert suite.children[1].status == CheckStatus.SKIPPED

    def test_error_dominates(self):
        suite = CheckSuite("root")
        suite.add_child(FunctionCheck("fails", lambda: 2.0, 1.0))
        suite.add_child(FunctionCheck("raises", failing, 1.0))
        assert suite.run() == CheckStatus.ERROR
        assert suite.result.detail == {"failed": 1, "error": 1}

    def test_reset(self):
        suite = self.build(SuitePolicy.CONTINUE_ON_FAILURE)
        suite.run()
        suite.reset()
        assert suite.status == CheckStatus.PENDING
        assert suite.children[0].children[0].result is None
