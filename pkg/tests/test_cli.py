import json

import pytest

from rbindex import cli, load_instance, save_instance
from conftest import CLASSIC3, NONINDEXABLE, PCL_FAIL, PCL_PASS


def write_restless(path, spec):
    body = {"type": "restless", "n": len(spec["reward1"]),
            "beta": spec["beta"], "R1": spec["reward1"],
            "P0": spec["trans0"], "P1": spec["trans1"]}
    if "reward0" in spec:
        body["R0"] = spec["reward0"]
    path.write_text(json.dumps(body))
    return str(path)


def write_classic(path, startup_cost=None, horizon=None, beta=None):
    body = {"type": "classic", "n": 3,
            "beta": CLASSIC3["beta"] if beta is None else beta,
            "R": CLASSIC3["reward"], "P": CLASSIC3["trans"]}
    if startup_cost is not None:
        body["startup_cost"] = startup_cost
    if horizon is not None:
        body["horizon"] = horizon
    path.write_text(json.dumps(body))
    return str(path)


@pytest.fixture
def paths(tmp_path):
    return {
        "pcl_pass": write_restless(tmp_path / "p1.json", PCL_PASS),
        "nonindexable": write_restless(tmp_path / "p2.json", NONINDEXABLE),
        "pcl_fail": write_restless(tmp_path / "p3.json", PCL_FAIL),
        "tmp": tmp_path,
    }


def run(capsys, argv):
    rc = cli.main(argv)
    cap = capsys.readouterr()
    return rc, cap.out.splitlines(), cap.err


class TestInstanceIO:
    def test_round_trip_is_identity(self, paths):
        first = load_instance(paths["nonindexable"])
        copy_path = paths["tmp"] / "copy.json"
        save_instance(copy_path, first)
        second = load_instance(copy_path)
        assert second == first
        saved = json.loads(copy_path.read_text())
        assert set(saved) == {"type", "n", "beta", "R0", "R1", "P0", "P1"}

    def test_unknown_fields_rejected(self, paths):
        bad = paths["tmp"] / "extra.json"
        body = json.loads((paths["tmp"] / "p1.json").read_text())
        body["bogus"] = 1
        bad.write_text(json.dumps(body))
        rc = cli.main(["mpi", str(bad)])
        assert rc == 3


class TestMpiCommand:
    def test_verifiable_instance_table(self, capsys, paths):
        rc, out, _ = run(capsys, ["mpi", paths["pcl_pass"]])
        assert rc == 0
        assert out == [
            "rank,state,index,active_set",
            "1,1,0.9016,{1}",
            "2,2,0.24977588866442518,{1;2}",
            "3,3,-0.07502092369518554,{1;2;3}",
            "PCL: pass",
        ]

    def test_negative_work_instance_diagnostics(self, capsys, paths):
        rc, out, _ = run(capsys, ["mpi", paths["pcl_fail"]])
        assert rc == 0
        assert out[1] == "1,2,0.8033,{2}"
        assert out[2] == "2,1,1.7158124803322856,{1;2}"
        assert out[3] == "3,3,0.6436524261429155,{1;2;3}"
        assert out[4] == "PCL: fail (w_1^{2} = -0.396619 < 0)"

    def test_explicit_chain_family(self, capsys, paths):
        chain = paths["tmp"] / "chain.json"
        chain.write_text("[1, 2, 3]")
        rc, out, _ = run(capsys, ["mpi", paths["pcl_pass"],
                                  "--family", f"nested:{chain}"])
        assert rc == 0
        assert out[1] == "1,1,0.9016,{1}"
        assert out[3] == "3,3,-0.07502092369518554,{1;2;3}"
        assert out[4] == "PCL: pass"

    def test_switching_family_six_rows(self, capsys, paths):
        inst = write_classic(paths["tmp"] / "sw.json", startup_cost=0.1)
        rc, out, _ = run(capsys, ["mpi", inst, "--family", "switching"])
        assert rc == 0
        assert out == [
            "rank,state,index,active_set",
            "1,1:2,0.4242,{1:2}",
            "2,0:2,0.3582385,{0:2;1:2}",
            "3,1:3,0.06148677329164114,{0:2;1:2;1:3}",
            "4,1:1,0.04800180163907646,{0:2;1:1;1:2;1:3}",
            "5,0:3,0.044292449395902926,{0:2;0:3;1:1;1:2;1:3}",
            "6,0:1,0.04300180163907648,{0:1;0:2;0:3;1:1;1:2;1:3}",
            "PCL: pass",
        ]

    def test_horizon_family_layer_labels(self, capsys, paths):
        inst = write_classic(paths["tmp"] / "hz.json", horizon=2, beta=0.5)
        rc, out, _ = run(capsys, ["mpi", inst, "--family", "horizon"])
        assert rc == 0
        assert out[1] == "1,2:2,0.4242,{2:2}"
        assert out[2] == "2,1:2,0.4242,{1:2;2:2}"
        assert out[6] == "6,1:1,0.025,{1:1;1:2;1:3;2:1;2:2;2:3}"
        assert out[7] == "PCL: pass"

    def test_horizon_family_needs_horizon_field(self, capsys, paths):
        inst = write_classic(paths["tmp"] / "nohz.json")
        rc, _, err = run(capsys, ["mpi", inst, "--family", "horizon"])
        assert rc == 3
        assert "horizon" in err

    def test_repeat_invocations_byte_identical(self, capsys, paths):
        rc1 = cli.main(["mpi", paths["pcl_pass"]])
        first = capsys.readouterr().out
        rc2 = cli.main(["mpi", paths["pcl_pass"]])
        second = capsys.readouterr().out
        assert rc1 == rc2 == 0
        assert first == second


class TestTestCommand:
    def test_verifiable_instance(self, capsys, paths):
        rc, out, _ = run(capsys, ["test", paths["pcl_pass"]])
        assert rc == 0
        assert out[0] == "verdict: indexable"
        assert out[1] == "family: {} {1} {1;2} {1;2;3}"
        assert out[2] == "state,mpi"
        assert out[3] == "1,0.9016"
        assert out[4] == "2,0.24977588866442518"
        assert out[5] == "3,-0.07502092369518559"
        assert out[6] == "PCL: pass"

    def test_nonindexable_witness(self, capsys, paths):
        rc, out, _ = run(capsys, ["test", paths["nonindexable"]])
        assert rc == 0
        assert out[0] == "verdict: nonindexable"
        assert out[1] == ("witness: minimal set {1;2} at wage 0.310641 vs "
                          "{1} at wage 0.120179: minimal active sets are "
                          "not nested")
        assert out[2] == "PCL: fail (w_2^{1} = -0.474572 < 0)"

    def test_indexable_but_unverifiable_instance(self, capsys, paths):
        rc, out, _ = run(capsys, ["test", paths["pcl_fail"]])
        assert rc == 0
        assert out[0] == "verdict: indexable"
        assert out[1] == "family: {} {2} {2;3} {1;2;3}"
        assert out[4] == "2,0.8033"
        assert out[5] == "3,0.5713053734238285"
        assert out[6] == "PCL: fail (w_1^{2} = -0.396619 < 0)"


class TestRegionCommand:
    def test_full_table(self, capsys, paths):
        rc, out, _ = run(capsys, ["region", paths["pcl_pass"]])
        assert rc == 0
        assert out[0] == "set,g,f,on_upper_boundary"
        assert len(out) == 9
        assert out[2] == "{1},3.510877929659555,3.1654075413810547,1"
        flags = [int(line.rsplit(",", 1)[1]) for line in out[1:]]
        assert flags == [1, 1, 0, 1, 0, 0, 0, 1]

    def test_out_file(self, capsys, paths):
        target = paths["tmp"] / "region.csv"
        rc, out, _ = run(capsys, ["region", paths["pcl_pass"],
                                  "--out", str(target)])
        assert rc == 0 and out == []
        lines = target.read_text().splitlines()
        assert lines[0] == "set,g,f,on_upper_boundary"
        assert len(lines) == 9


class TestCensusCommand:
    def test_tiny_run_matches_api(self, capsys, paths):
        from rbindex.experiments import CensusConfig, census
        rc, out, _ = run(capsys, ["census", "--n", "3", "--beta", "0.9",
                                  "--samples", "64", "--seed", "3",
                                  "--chunk", "32"])
        assert rc == 0
        assert out[0] == ("beta,n,samples,nonindexable,indexable_not_pcl,"
                          "nonindexable_rate,indexable_not_pcl_rate")
        row = census(CensusConfig(n=3, betas=(0.9,), samples=64, seed=3,
                                  chunk=32))[0]
        fields = out[1].split(",")
        assert fields[0] == repr(row["beta"])
        assert int(fields[3]) == row["nonindexable"]
        assert int(fields[4]) == row["indexable_not_pcl"]

    def test_bad_n_exits_3(self, capsys, paths):
        rc, _, err = run(capsys, ["census", "--n", "9", "--beta", "0.9",
                                  "--samples", "8", "--seed", "0"])
        assert rc == 3
        assert err.startswith("error:")


class TestSweepCommand:
    def test_routing_single_point(self, capsys, paths):
        cfg = paths["tmp"] / "r.json"
        cfg.write_text(json.dumps({"kind": "routing", "rho_min": 0.5,
                                   "rho_max": 1.0, "grid_width": 0.9,
                                   "buffers": [4, 4], "lam": 1.0}))
        rc, out, err = run(capsys, ["sweep", str(cfg)])
        assert rc == 0 and err == ""
        assert out[0] == ("rho1,rho2,mu1,mu2,optimal,cost_mpi,cost_jsq,"
                          "cost_ior,gap_mpi,gap_jsq,gap_ior,sojourn_mpi,"
                          "sojourn_jsq,sojourn_ior")
        assert len(out) == 2
        fields = out[1].split(",")
        assert fields[0] == fields[1] == "1.1111111111111112"
        assert fields[2] == fields[3] == "0.9"
        for gap in fields[8:11]:
            assert float(gap) >= -1e-9

    def test_routing_empty_grid_warns(self, capsys, paths):
        cfg = paths["tmp"] / "e.json"
        cfg.write_text(json.dumps({"kind": "routing", "rho_min": 0.5,
                                   "rho_max": 1.0, "grid_width": 1.0,
                                   "buffers": [2, 2]}))
        rc, out, err = run(capsys, ["sweep", str(cfg)])
        assert rc == 0
        assert len(out) == 1 and out[0].startswith("rho1,")
        assert "empty" in err

    def test_scheduling_instances(self, capsys, paths):
        cfg = paths["tmp"] / "s.json"
        cfg.write_text(json.dumps({"kind": "scheduling", "instances": [
            {"lam": [0.4, 0.5], "mu": [1.0, 1.2], "c": [1.0, 2.0],
             "r": [0.3, 0.1], "buffer": [4, 3]}]}))
        rc, out, _ = run(capsys, ["sweep", str(cfg)])
        assert rc == 0
        assert out[0] == ("instance,optimal,cost_mpi,cost_cmu,cost_src,"
                          "gap_mpi,gap_cmu,gap_src")
        fields = out[1].split(",")
        assert fields[0] == "0"
        assert float(fields[5]) >= -1e-9
        assert float(fields[7]) > 0.1    # space-biased rule is clearly off

    def test_config_errors(self, capsys, paths):
        bad_kind = paths["tmp"] / "bk.json"
        bad_kind.write_text(json.dumps({"kind": "other"}))
        rc, _, err = run(capsys, ["sweep", str(bad_kind)])
        assert rc == 3 and "'other'" in err

        missing = paths["tmp"] / "mk.json"
        missing.write_text(json.dumps({"kind": "scheduling",
                                       "instances": [{"lam": [0.4]}]}))
        rc, _, err = run(capsys, ["sweep", str(missing)])
        assert rc == 3 and "missing key" in err

        not_json = paths["tmp"] / "nj.json"
        not_json.write_text("{kind:")
        rc, _, err = run(capsys, ["sweep", str(not_json)])
        assert rc == 3 and "not valid JSON" in err


class TestQindexCommand:
    def test_single_values(self, capsys, paths):
        cases = ((["qindex", "admission", "--c", "2", "--mu", "1",
                   "--rho", "0.5", "--j", "1"], "5.0"),
                 (["qindex", "bias", "--c", "1", "--r", "0", "--mu", "1",
                   "--rho", "1", "--n", "5", "--i", "3"], "4.0"),
                 (["qindex", "mts", "--b", "2", "--h", "1", "--mu", "1.5",
                   "--rho", "0.6", "--i", "1"], "3.0"))
        for argv, want in cases:
            rc, out, _ = run(capsys, argv)
            assert rc == 0 and out == [want]

    def test_ranges(self, capsys, paths):
        rc, out, _ = run(capsys, ["qindex", "gamma", "--r", "1",
                                  "--rho", "1", "--i", "0:2"])
        assert rc == 0
        assert out == ["i,value", "0,1.0", "1,3.0", "2,6.0"]
        rc, out, _ = run(capsys, ["qindex", "mts", "--b", "2", "--h", "1",
                                  "--mu", "1.5", "--rho", "0.6",
                                  "--i=-2:1"])
        assert rc == 0
        assert out[0] == "i,value"
        assert [line.split(",")[0] for line in out[1:]] == \
            ["-2", "-1", "0", "1"]
        assert float(out[1].split(",")[1]) == pytest.approx(-0.528)
        assert out[4] == "1,3.0"

    def test_empty_range_exits_3(self, capsys, paths):
        rc, _, err = run(capsys, ["qindex", "admission", "--c", "1",
                                  "--mu", "1", "--rho", "0.5",
                                  "--j", "5:2"])
        assert rc == 3 and "empty range" in err


class TestExitCodes:
    def test_zero_marginal_work_exits_2(self, capsys, paths):
        inst = paths["tmp"] / "zerow.json"
        inst.write_text(json.dumps(
            {"type": "restless", "n": 2, "beta": 0.9,
             "R1": [1.0, 0.0], "Q0": [1.0, 1.0], "Q1": [1.0, 1.0],
             "P0": [[1.0, 0.0], [0.0, 1.0]],
             "P1": [[0.0, 1.0], [0.0, 1.0]]}))
        rc, _, err = run(capsys, ["mpi", str(inst)])
        assert rc == 2
        assert "marginal work at state 1" in err

    def test_malformed_row_sum_exits_3_naming_the_row(self, capsys, paths):
        inst = paths["tmp"] / "bad.json"
        inst.write_text(json.dumps(
            {"type": "restless", "n": 2, "beta": 0.9, "R1": [1.0, 0.0],
             "P0": [[1.0, 0.0], [0.0, 1.0]],
             "P1": [[0.0, 1.0], [0.4, 0.5]]}))
        rc, _, err = run(capsys, ["mpi", str(inst)])
        assert rc == 3
        assert err.rstrip() == "error: trans1 row 2 sums to 0.9, not 1"

    def test_missing_file_exits_3(self, capsys, paths):
        rc, _, err = run(capsys, ["mpi",
                                  str(paths["tmp"] / "nothere.json")])
        assert rc == 3 and "No such file" in err

    def test_bad_chain_file_exits_3(self, capsys, paths):
        chain = paths["tmp"] / "chain.json"
        chain.write_text("[0]")
        rc, _, err = run(capsys, ["mpi", paths["pcl_pass"],
                                  "--family", f"nested:{chain}"])
        assert rc == 3 and "bad state label" in err

    def test_size_guard_exits_4(self, capsys, paths, monkeypatch):
        monkeypatch.setenv("RB_MPI_MAX_STATES", "2")
        rc, _, err = run(capsys, ["test", paths["pcl_pass"]])
        assert rc == 4
        assert "2^3" in err
