import pytest
import xml.etree.ElementTree as ET
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from bandit.errors import ConfigError
from experiments.harness import ExperimentConfig, run_experiment, sweep_table

try:
    from services.config_service import ConfigService
    from services.results_service import SUMMARY_COLUMNS, TRACE_COLUMNS, ResultsService
except ImportError as e:
    pytest.skip(f"Service modules not available: {e}", allow_module_level=True)


@pytest.fixture
def config_service(project_root):
    """Create a ConfigService instance for testing"""
    return ConfigService(project_root)


@pytest.fixture
def results_service(temp_output_dir):
    """Create a ResultsService writing into a temporary directory"""
    return ResultsService(temp_output_dir)


@pytest.fixture
def small_results(small_config):
    """Results of a two-cell, two-repetition experiment"""
    return run_experiment(replace(small_config, T=25, epsilons=[0.0, 0.5]))


class TestConfigService:
    """Test ConfigService functionality"""

    @pytest.mark.unit
    def test_presets_available(self, config_service):
        """Test both presets load from config/presets.json"""
        assert set(config_service.get_preset_names()) >= {'theorem', 'section7'}
        assert config_service.get_preset('section7')['nu_mode'] == 'literal'

    @pytest.mark.unit
    def test_unknown_preset(self, config_service):
        with pytest.raises(ConfigError) as exc_info:
            config_service.get_preset('nonexistent')
        assert exc_info.value.key == 'preset'

    @pytest.mark.unit
    def test_fallback_presets_when_file_missing(self, temp_output_dir):
        """Test the in-code presets are used when config/ is absent"""
        service = ConfigService(temp_output_dir)
        assert service.get_preset('theorem')['T'] == 2000

    @pytest.mark.unit
    @pytest.mark.parametrize("raw,expected", [
        ('--epsilon', 'epsilons'),
        ('nu-mode', 'nu_mode'),
        ('reps', 'repetitions'),
        ('horizon', 'T'),
        ('kappa', 'kappa'),
    ])
    def test_normalize_key(self, raw, expected):
        assert ConfigService.normalize_key(raw) == expected

    @pytest.mark.unit
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            ConfigService.normalize_key('learning_speed')

    @pytest.mark.unit
    def test_coerce_types(self, config_service):
        """Test lists, optional floats and seeds are parsed"""
        typed = config_service.coerce({
            'epsilon': '0, 0.25,0.5',
            'algorithms': 'lifted,classic',
            'kappa': 'none',
            'seed': str(2 ** 64 - 1),
            'T': '300',
        })
        assert typed == {
            'epsilons': [0.0, 0.25, 0.5],
            'algorithms': ['lifted', 'classic'],
            'kappa': None,
            'seed': 2 ** 64 - 1,
            'T': 300,
        }

    @pytest.mark.unit
    @pytest.mark.parametrize("values", [
        {'seed': '-1'}, {'seed': str(2 ** 64)}, {'T': 'many'},
        {'delta': '1.5'}, {'delta': '0'}, {'eta': '-0.1'},
    ])
    def test_coerce_rejects_bad_values(self, config_service, values):
        with pytest.raises(ConfigError):
            config_service.coerce(values)

    @pytest.mark.unit
    def test_parse_overrides(self, config_service):
        overrides = config_service.parse_overrides(['--T=100', '--perturbation=constant-sign'])
        assert overrides == {'T': '100', 'perturbation': 'constant-sign'}
        with pytest.raises(ConfigError):
            config_service.parse_overrides(['positional'])

    @pytest.mark.unit
    def test_read_config_file(self, config_service, project_root):
        """Test the sample file parses into known keys"""
        values = config_service.read_config_file(project_root / 'config' / 'section7.conf')
        assert values['preset'] == 'section7'
        assert config_service.coerce(values)['epsilons'] == [0.0, 0.25, 0.5, 0.75, 1.0]

    @pytest.mark.unit
    def test_missing_config_file(self, config_service, temp_output_dir):
        missing = temp_output_dir / 'missing.conf'
        with pytest.raises(ConfigError) as exc_info:
            config_service.read_config_file(missing)
        assert 'missing.conf' in str(exc_info.value)

    @pytest.mark.unit
    def test_precedence(self, config_service, temp_output_dir):
        """Test preset < file < flags"""
        conf = temp_output_dir / 'exp.conf'
        conf.write_text("# comment\nT = 300\nreps = 4\nepsilon = 0.1, 0.2\n")
        config = config_service.build_config(preset='theorem', config_file=conf, overrides={'T': '50'})
        assert isinstance(config, ExperimentConfig)
        assert config.T == 50
        assert config.repetitions == 4
        assert config.epsilons == [0.1, 0.2]
        assert config.d == 5

    @pytest.mark.unit
    def test_file_selects_preset(self, config_service, project_root):
        """Test a file naming a preset pulls in that preset's values"""
        config = config_service.build_config(config_file=project_root / 'config' / 'section7.conf')
        assert config.preset == 'section7'
        assert config.nu_mode == 'literal'
        assert config.epsilons[-1] < 1.0

    @pytest.mark.unit
    def test_unknown_key_in_file(self, config_service, temp_output_dir):
        conf = temp_output_dir / 'bad.conf'
        conf.write_text("learning_speed = 3\n")
        with pytest.raises(ConfigError):
            config_service.build_config(config_file=conf)


class TestResultsService:
    """Test the CSV and chart writers"""

    @pytest.mark.integration
    def test_write_run(self, results_service, small_results, temp_output_dir):
        """Test trace.csv and summary.csv columns and row counts"""
        paths = results_service.write_run(small_results)
        assert [p.name for p in paths] == ['trace.csv', 'summary.csv']

        trace = pd.read_csv(temp_output_dir / 'trace.csv', float_precision='round_trip')
        assert list(trace.columns) == TRACE_COLUMNS
        assert len(trace) == 2 * 2 * 25
        assert trace['round'].min() == 1 and trace['round'].max() == 25

        summary = pd.read_csv(temp_output_dir / 'summary.csv', float_precision='round_trip')
        assert list(summary.columns) == SUMMARY_COLUMNS
        assert len(summary) == 4
        np.testing.assert_allclose(summary['deviation_term'] + summary['iterate_term'],
                                   summary['final_lin_regret'], rtol=0, atol=1e-9)
        assert (summary['bound_lemma8'] > 0).all()

    @pytest.mark.integration
    def test_floats_round_trip(self, results_service, small_results, temp_output_dir):
        """Test 17 significant digits reproduce every float exactly"""
        results_service.write_run(small_results)
        trace = pd.read_csv(temp_output_dir / 'trace.csv', float_precision='round_trip')
        first = small_results[('lifted', 0.0)][0]
        pd.testing.assert_series_equal(
            trace['cum_loss'].iloc[:25].reset_index(drop=True),
            pd.Series(first.cum_loss, name='cum_loss'),
            check_exact=True,
        )

    @pytest.mark.integration
    def test_write_sweep(self, results_service, small_results, temp_output_dir):
        """Test sweep.csv and a well-formed SVG chart"""
        results_service.write_sweep(sweep_table(small_results))
        table = pd.read_csv(temp_output_dir / 'sweep.csv')
        assert len(table) == 2
        root = ET.parse(temp_output_dir / 'sweep.svg').getroot()
        assert root.tag.endswith('svg')

    @pytest.mark.integration
    def test_outputs_are_byte_identical(self, small_results, temp_output_dir):
        """Test writing the same results twice gives identical bytes"""
        first = ResultsService(temp_output_dir / 'a')
        second = ResultsService(temp_output_dir / 'b')
        table = sweep_table(small_results)
        for service in (first, second):
            service.write_run(small_results)
            service.write_sweep(table)
        for name in ('trace.csv', 'summary.csv', 'sweep.csv', 'sweep.svg'):
            assert (temp_output_dir / 'a' / name).read_bytes() == (temp_output_dir / 'b' / name).read_bytes(), name

    @pytest.mark.unit
    def test_creates_output_dir(self, temp_output_dir):
        target = temp_output_dir / 'nested' / 'out'
        ResultsService(target)
        assert Path(target).is_dir()
