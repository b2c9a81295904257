#!/usr/bin/env python3
"""
Unit tests for config_handler.py
Tests defaults, config file loading, environment overrides and atomic save.
"""

import unittest
import tempfile
import shutil
import json
from pathlib import Path
from unittest.mock import patch

# Add parent directory to path for imports
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from config_handler import ConfigHandler, RunConfig, DEFAULT_SEED


class TestConfigHandler(unittest.TestCase):
    """Tests for ConfigHandler class."""

    def setUp(self):
        """Set up test fixtures with mocked config directory."""
        self.temp_dir = Path(tempfile.mkdtemp())
        # Patch _get_config_dir to use temp directory
        self.patcher = patch.object(ConfigHandler, '_get_config_dir', return_value=self.temp_dir)
        self.patcher.start()
        self.config_handler = ConfigHandler(environ={})

    def tearDown(self):
        """Clean up test fixtures."""
        self.patcher.stop()
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_default_config_created(self):
        """Test that defaults apply when no file or environment is present."""
        config = self.config_handler.config
        self.assertIsInstance(config, RunConfig)
        self.assertEqual(config.seed, DEFAULT_SEED)
        self.assertEqual(config.span_budget, 10 ** 7)
        self.assertEqual(config.scan_budget, 2 ** 20)
        self.assertEqual(config.threads, 1)
        self.assertEqual(config.output_path, "")

    def test_save_and_load_config(self):
        """Test saving and loading configuration."""
        self.config_handler.config.seed = 7
        self.config_handler.config.threads = 4
        self.config_handler.config.output_path = "/tmp/report.txt"

        self.assertTrue(self.config_handler.save())

        new_handler = ConfigHandler(environ={})

        self.assertEqual(new_handler.config.seed, 7)
        self.assertEqual(new_handler.config.threads, 4)
        self.assertEqual(new_handler.config.output_path, "/tmp/report.txt")

    def test_save_leaves_no_temp_files(self):
        """Test that the atomic save only leaves config.json behind."""
        self.config_handler.save()
        names = sorted(p.name for p in self.temp_dir.iterdir())
        self.assertEqual(names, ["config.json"])

    def test_load_ignores_invalid_values(self):
        """Invalid values in the config file fall back to defaults."""
        config_file = self.temp_dir / "config.json"
        config_file.write_text(
            json.dumps({"threads": 0, "span_budget": True, "tuple_budget": "big", "node_budget": 500}),
            encoding='utf-8'
        )

        new_handler = ConfigHandler(environ={})

        self.assertEqual(new_handler.config.threads, 1)
        self.assertEqual(new_handler.config.span_budget, 10 ** 7)
        self.assertEqual(new_handler.config.tuple_budget, 10 ** 6)
        self.assertEqual(new_handler.config.node_budget, 500)

    def test_load_rejects_non_object(self):
        """A JSON list is not a config."""
        (self.temp_dir / "config.json").write_text("[1, 2]", encoding='utf-8')
        new_handler = ConfigHandler(environ={})
        self.assertEqual(new_handler.config.seed, DEFAULT_SEED)

    def test_environment_overrides_file(self):
        """Test that FINLAB_* variables win over the config file."""
        (self.temp_dir / "config.json").write_text(json.dumps({"seed": 5, "threads": 2}), encoding='utf-8')

        new_handler = ConfigHandler(environ={
            "FINLAB_SEED": "11",
            "FINLAB_BUDGET_SCAN": "1024",
            "FINLAB_THREADS": "not-a-number",
        })

        self.assertEqual(new_handler.config.seed, 11)
        self.assertEqual(new_handler.config.scan_budget, 1024)
        self.assertEqual(new_handler.config.threads, 2)

    def test_explicit_config_file(self):
        """Test that an explicit path replaces the platform config file."""
        other = self.temp_dir / "other.json"
        other.write_text(json.dumps({"candidate_budget": 99}), encoding='utf-8')

        new_handler = ConfigHandler(config_file=other, environ={})
        self.assertEqual(new_handler.config_file, other)
        self.assertEqual(new_handler.config.candidate_budget, 99)

        via_env = ConfigHandler(environ={"FINLAB_CONFIG": str(other)})
        self.assertEqual(via_env.config.candidate_budget, 99)

    def test_apply_overrides(self):
        """Command-line values are validated and None means unset."""
        self.config_handler.apply_overrides(seed=3, threads=None, scan_budget=8)
        self.assertEqual(self.config_handler.config.seed, 3)
        self.assertEqual(self.config_handler.config.threads, 1)
        self.assertEqual(self.config_handler.config.scan_budget, 8)

        with self.assertRaises(ValueError):
            self.config_handler.apply_overrides(threads=-2)
        with self.assertRaises(ValueError):
            self.config_handler.apply_overrides(colour="red")

    def test_describe_lists_every_field(self):
        """Test the key=value dump printed by `finlab config`."""
        text = self.config_handler.describe()
        self.assertIn(f"seed={DEFAULT_SEED}\n", text)
        self.assertIn("threads=1\n", text)
        self.assertTrue(text.startswith("config_file="))


if __name__ == '__main__':
    unittest.main()
