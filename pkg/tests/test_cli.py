import io
import json
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr
from unittest.mock import Mock, patch

from omega_orbits.cli.main import (
    EXIT_CAPACITY,
    EXIT_DOMAIN,
    EXIT_OK,
    EXIT_USAGE,
    main,
    parse_args,
    render,
    run,
)
from omega_orbits.cli.models import ARTIFACTS, EnumerationResult, RunConfig
from omega_orbits.core.utils import load_schema


def run_to_json(argv: list[str]) -> dict:
    """Runs a command with JSON output captured through a temporary file."""
    directory = tempfile.mkdtemp()
    try:
        path = os.path.join(directory, "out.json")
        status = run(parse_args([*argv, "--output", path]))
        if status != EXIT_OK:
            raise AssertionError(f"{argv} exited with {status}")
        with open(path) as f:
            return json.load(f)
    finally:
        shutil.rmtree(directory)


def assert_matches_schema(test: unittest.TestCase, name: str, payload: dict) -> None:
    schema = load_schema(name)
    test.assertLessEqual(set(payload), set(schema["properties"]))
    test.assertLessEqual(set(schema["required"]), set(payload))


class TestParseArgs(unittest.TestCase):
    def test_descent_config(self):
        """A descent report invocation parses to a valid config."""
        config = parse_args(["descent-report", "--n", "3", "--q", "2", "--k", "2"])
        self.assertEqual(config.command, "descent-report")
        self.assertEqual(config.parameters, {"n": 3, "q": 2, "k": 2})
        self.assertEqual(config.format, "json")

    def test_help(self):
        """--help prints usage and exits 0."""
        with patch("sys.stdout", new_callable=io.StringIO) as out:
            with self.assertRaises(SystemExit) as ctx:
                parse_args(["--help"])
        self.assertEqual(ctx.exception.code, 0)
        self.assertIn("usage", out.getvalue())

    def test_missing_flag(self):
        """A missing required flag is a usage error naming the flag."""
        err = io.StringIO()
        with redirect_stderr(err), self.assertRaises(SystemExit) as ctx:
            parse_args(["reduce", "--form", "[1,0,1]"])
        self.assertEqual(ctx.exception.code, EXIT_USAGE)
        self.assertIn("--p", err.getvalue())

    def test_csv_only_for_enumeration(self):
        """CSV output is refused for structured reports."""
        with redirect_stderr(io.StringIO()), self.assertRaises(SystemExit) as ctx:
            parse_args(["h1", "--group", "z2", "--module", "Z^1;action=-1", "--format", "csv"])
        self.assertEqual(ctx.exception.code, EXIT_USAGE)

    def test_run_config_validation(self):
        """Missing per-command parameters are rejected."""
        with self.assertRaises(ValueError):
            RunConfig(command="reduce", parameters={"form": "[1,0,1]"})


class TestCommands(unittest.TestCase):
    def test_omega_test(self):
        """{[1:0], [0:1]} is in Omega over S = {}."""
        payload = run_to_json(["omega-test", "--points", "1:0,0:1", "--s", ""])
        self.assertTrue(payload["member"])
        self.assertEqual(payload["colliding_primes"], [])
        self.assertEqual(payload["form"], [0, 1, 0])
        self.assertEqual(payload["discriminant"], 1)
        assert_matches_schema(self, "omega_test", payload)

    def test_omega_test_collision(self):
        """{[1:1], [-1:1]} collides at 2."""
        payload = run_to_json(["omega-test", "--points", "1:1,-1:1"])
        self.assertFalse(payload["member"])
        self.assertEqual(payload["colliding_primes"], [2])
        self.assertFalse(payload["is_omega_form"])

    def test_enumerate_with_orbits(self):
        """Unit-discriminant quadratics of height 20 form one orbit."""
        payload = run_to_json(
            ["enumerate", "--degree", "2", "--s", "", "--height", "20", "--orbits"]
        )
        self.assertEqual(payload["orbit_count"], 1)
        self.assertEqual(payload["count"], len(payload["forms"]))
        assert_matches_schema(self, "enumeration", payload)

    def test_orbits(self):
        """xy and x^2 + y^2 land in separate orbits."""
        payload = run_to_json(["orbits", "--forms", "[0,1,0];[1,0,1];[1,-1,0]"])
        self.assertEqual(payload["orbit_count"], 2)
        assert_matches_schema(self, "orbits", payload)

    def test_reduce(self):
        """x^2 - y^2 mod 2 is a double factor."""
        payload = run_to_json(["reduce", "--form", "[1,0,-1]", "--p", "2"])
        self.assertEqual(payload["factors"], [{"coeffs": [1, 1], "mult": 2}])
        self.assertEqual(payload["degree"], 2)
        assert_matches_schema(self, "reduce", payload)

    def test_h1_integral(self):
        """Z/2 acting on Z by negation has H^1 = Z/2."""
        payload = run_to_json(["h1", "--group", "z2", "--module", "Z^1;action=-1"])
        self.assertEqual(payload["elementary_divisors"], [2])
        self.assertEqual(payload["h1_order"], 2)
        assert_matches_schema(self, "h1", payload)

    def test_h1_finite(self):
        """Z/3 rotating (Z/3)^2 has H^1 of order 3."""
        payload = run_to_json(["h1", "--group", "z3", "--module", "Z/3^2;action=0,-1,1,-1"])
        self.assertEqual(payload["h1_order"], 3)
        self.assertEqual(len(payload["classes"]), 3)

    def test_six_term(self):
        """All toy sequences pass, twisted fibers included."""
        payload = run_to_json(["six-term", "--twist"])
        self.assertTrue(payload["passed"])
        self.assertEqual(len(payload["reports"]), 8)
        assert_matches_schema(self, "six_term", payload)

    def test_descent_report(self):
        """The three-point descent report over F_4 passes."""
        payload = run_to_json(["descent-report", "--n", "3", "--q", "2", "--k", "2"])
        self.assertTrue(payload["passed"])
        self.assertEqual(payload["base_orbit_count"], 2)
        assert_matches_schema(self, "descent_report", payload)

    def test_deterministic_under_threads(self):
        """Identical inputs give identical bytes for any thread count."""
        argv = ["enumerate", "--degree", "3", "--s", "2", "--height", "2"]
        single = run_to_json(argv)
        with patch("omega_orbits.config.THREADS", 3):
            self.assertEqual(run_to_json(argv), single)

    def test_csv(self):
        """Enumerations render as CSV with one column per coefficient."""
        result = EnumerationResult(degree=2, S=[], height=1, count=1, forms=[[0, 1, 0]])
        self.assertEqual(render(result, "csv"), "a2,a1,a0\n0,1,0\n")

    def test_text(self):
        """Text output lists one field per line."""
        result = EnumerationResult(degree=2, S=[], height=1, count=0, forms=[])
        self.assertIn("count: 0\n", render(result, "text"))


class TestExitCodes(unittest.TestCase):
    def test_domain_error(self):
        """Malformed points exit with the domain status."""
        with self.assertLogs("omega_orbits.cli.main", level="ERROR"):
            status = run(parse_args(["omega-test", "--points", "0:0"]))
        self.assertEqual(status, EXIT_DOMAIN)

    def test_non_prime_s(self):
        """A composite in --s is a domain error."""
        with self.assertLogs("omega_orbits.cli.main", level="ERROR"):
            status = run(parse_args(["omega-test", "--points", "1:0", "--s", "4"]))
        self.assertEqual(status, EXIT_DOMAIN)

    def test_composite_modulus(self):
        """Reduction modulo a composite is a domain error."""
        with self.assertLogs("omega_orbits.cli.main", level="ERROR"):
            status = run(parse_args(["reduce", "--form", "[0,1,0]", "--p", "4"]))
        self.assertEqual(status, EXIT_DOMAIN)

    def test_arithmetic_error(self):
        """Arithmetic failures inside a command exit with the domain status."""
        failing = Mock(side_effect=ZeroDivisionError("division by zero"))
        with patch.dict("omega_orbits.cli.main.COMMANDS", {"reduce": failing}):
            with self.assertLogs("omega_orbits.cli.main", level="ERROR") as logs:
                status = run(parse_args(["reduce", "--form", "[1,0,1]", "--p", "5"]))
        self.assertEqual(status, EXIT_DOMAIN)
        self.assertIn("division by zero", logs.output[0])
        failing.assert_called_once()

    @patch("omega_orbits.config.MAX_CANDIDATES", 10)
    def test_capacity_error(self):
        """Oversized scans exit with the capacity status."""
        with self.assertLogs("omega_orbits.cli.main", level="ERROR"):
            status = run(parse_args(["enumerate", "--degree", "3", "--height", "3"]))
        self.assertEqual(status, EXIT_CAPACITY)

    def test_main_exits(self):
        """main forwards the status to sys.exit."""
        with patch("sys.stdout", new_callable=io.StringIO):
            with self.assertRaises(SystemExit) as ctx:
                main(["reduce", "--form", "[0,1,0]", "--p", "5"])
        self.assertEqual(ctx.exception.code, EXIT_OK)


class TestSchemas(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_shipped_schemas_match_models(self):
        """Every shipped schema has the properties and required keys of its model."""
        for name, model in ARTIFACTS.items():
            shipped = load_schema(name)
            generated = model.model_json_schema()
            self.assertEqual(set(shipped["properties"]), set(generated["properties"]), name)
            self.assertEqual(set(shipped["required"]), set(generated.get("required", [])), name)

    def test_schemas_command(self):
        """The schemas command writes one file per artifact."""
        with patch("omega_orbits.config.AVAILABLE_SCHEMAS", list(ARTIFACTS)):
            payload = run_to_json(["schemas", "--directory", self.test_dir])
        self.assertEqual(payload["available_schemas"], sorted(ARTIFACTS))
        self.assertEqual(sorted(os.listdir(self.test_dir)), sorted(f"{n}.json" for n in ARTIFACTS))
