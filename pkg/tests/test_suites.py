from oulab.cli import main
from oulab.forms import MCEstimate
from oulab.reporting import mc_estimate_csv_text
from oulab.suites import SUITES, ModelContext, run_suite


class TestSuitesDirect:
    def test_every_suite_holds_at_reduced_budget(self):
        ctx = ModelContext.default(seed=5, n_samples=4000, n_triples=20,
                                   n_pairs=60, n_monotone=20)
        for name in SUITES:
            rows = run_suite(name, ctx)
            assert rows, name
            failures = [r.quantity for r in rows if not r.holds]
            assert not failures, (name, failures)

    def test_all_concatenates_everything(self):
        ctx = ModelContext.default(seed=5, n_samples=2000, n_triples=5,
                                   n_pairs=10, n_monotone=5)
        rows = run_suite("all", ctx)
        per_suite = sum(len(run_suite(n, ctx)) for n in SUITES)
        assert len(rows) == per_suite


class TestCatalogueConfig:
    def test_unknown_function_name_is_config_error(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("mc.seed = 1\nfunctions.ibp = mean,bogus_name\n")
        assert main(["--config", str(cfg), "verify", "ibp"]) == 2

    def test_custom_function_selection_runs(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "mc.seed = 1\nmc.n_samples = 2000\nbase.N = 64\n"
            "spectrum.M = 4\nbasis.M = 4\n"
            "functions.ibp = mean,tanh_mean\n"
            f"out.dir = {tmp_path / 'reports'}\n"
        )
        assert main(["--config", str(cfg), "verify", "ibp"]) == 0
        text = (tmp_path / "reports" / "verify_ibp.csv").read_text()
        assert "ibp[mean;tanh_mean;mode2]" in text

    def test_simulate_writes_mc_estimate_csv(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "mc.seed = 2\nmc.n_samples = 2000\nbase.N = 64\n"
            "spectrum.M = 4\nbasis.M = 4\nsim.n_paths = 400\n"
            f"out.dir = {tmp_path / 'reports'}\n"
        )
        assert main(["--config", str(cfg), "simulate"]) == 0
        lines = (tmp_path / "reports" / "ensemble.csv").read_text().splitlines()
        assert lines[0] == "quantity,value,std_error,n_samples,seed"
        assert len(lines) == 5


class TestMcEstimateCsv:
    def test_format(self):
        est = MCEstimate(value=1.5, std_error=0.25, n_samples=100, seed=7)
        text = mc_estimate_csv_text([("energy", est)])
        assert text.splitlines()[1] == "energy,1.5,0.25,100,7"
