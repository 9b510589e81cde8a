"""Experiment file loader and schema checks."""

import logging
import os
import sys

from config import config_from_yaml
from config.configuration import Configuration

from exceptions import FailedInitialization


CONFIG_YAML = "simlab.yaml"

_LOGGER = logging.getLogger("simlab")

_NUMBER = (int, float)
_NUMBER_OR_NAME = (int, float, str)
_NUMBERS_OR_NAME = (list, str)


def buildYAMLExceptionString(exception, file='simlab'):
    e = exception
    try:
        type = ''
        file = file
        line = 0
        column = 0
        info = ''

        if e.args[0]:
            type = e.args[0]
            type += ' '

        if e.args[1]:
            file = os.path.basename(e.args[1].name)
            line = e.args[1].line
            column = e.args[1].column

        if e.args[2]:
            info = os.path.basename(e.args[2])

        if e.args[3]:
            file = os.path.basename(e.args[3].name)
            line = e.args[3].line
            column = e.args[3].column

        errmsg = f"YAML file error {type}in {file}:{line}, column {column}: {info}"

    except Exception as e:
        errmsg = f"YAML file error: {e}"

    return errmsg


def config_to_dict(value):
    """Plain nested dicts and lists from a Configuration tree."""
    if isinstance(value, Configuration):
        return {key: config_to_dict(value[key]) for key in value.keys(levels=1)}
    if isinstance(value, dict):
        return {key: config_to_dict(v) for key, v in value.items()}
    if isinstance(value, list):
        return [config_to_dict(v) for v in value]
    return value


def _type_name(key_type) -> str:
    if isinstance(key_type, tuple):
        return ' or '.join(t.__name__ for t in key_type)
    return key_type.__name__


def check_required_keys(yaml, required, path='') -> bool:
    passed = True

    for keywords in required:
        for rk, rv in keywords.items():
            currentpath = path + rk if path == '' else path + '.' + rk

            requiredKey = rv.get('required')
            requiredSubkeys = rv.get('keys')
            keyType = rv.get('type', None)
            typeStr = '' if not keyType else f" (type is '{_type_name(keyType)}')"

            if not yaml:
                raise FailedInitialization(
                    f"YAML file is corrupt or truncated, expecting to find '{rk}' and found nothing")

            elements = list(enumerate(yaml)) if isinstance(yaml, list) else [(None, yaml)]
            for index, element in elements:
                elementpath = currentpath if index is None else f"{path}[{index}].{rk}"
                if not isinstance(element, dict):
                    raise FailedInitialization(f"'{elementpath}' is not a mapping")

                if rk not in element:
                    if requiredKey:
                        _LOGGER.error(f"'{elementpath}' is required for operation{typeStr}")
                        passed = False
                    continue

                yamlValue = element.get(rk)
                if yamlValue is None:
                    continue

                if keyType and (not isinstance(yamlValue, keyType) or isinstance(yamlValue, bool) and keyType is not bool):
                    _LOGGER.error(f"'{elementpath}' should be type '{_type_name(keyType)}'")
                    passed = False

                if not isinstance(requiredSubkeys, list):
                    raise FailedInitialization('Unexpected YAML checking error')
                if len(requiredSubkeys):
                    passed = check_required_keys(yamlValue, requiredSubkeys, elementpath) and passed
    return passed


def check_unsupported(yaml, required, path=''):
    try:
        passed = True
        if not yaml:
            raise FailedInitialization("YAML file is corrupt or truncated, nothing left to parse")
        elements = list(enumerate(yaml)) if isinstance(yaml, list) else [(None, yaml)]
        for index, element in elements:
            if not isinstance(element, dict):
                raise FailedInitialization('Unexpected YAML checking error')
            for yk, yamlValue in element.items():
                currentpath = path + yk if path == '' else path + '.' + yk
                if index is not None:
                    currentpath = f"{path}[{index}].{yk}"

                supportedSubkeys = None
                for rk in required:
                    supportedSubkeys = rk.get(yk, None)
                    if supportedSubkeys:
                        break
                if not supportedSubkeys:
                    _LOGGER.info(f"'{currentpath}' option is unsupported")
                    continue

                subkeyList = supportedSubkeys.get('keys', None)
                if subkeyList and yamlValue:
                    passed = check_unsupported(yamlValue, subkeyList, currentpath) and passed
    except FailedInitialization:
        raise
    except Exception as e:
        raise FailedInitialization(f"Unexpected exception: {e}")
    return passed


def _leaf(name, required=False, type=None):
    entry = {'required': required, 'keys': []}
    if type:
        entry['type'] = type
    return {name: entry}


SIMLAB_SCHEMA = [
    {
        'simlab': {'required': True, 'keys':
                   [
                       {'experiment': {'required': True, 'type': dict, 'keys': [
                           _leaf('name', True, str),
                           _leaf('model', True, str),
                           _leaf('truth', True, list),
                           _leaf('sample_size', type=int),
                           _leaf('runs', type=int),
                           _leaf('seed', type=int),
                           _leaf('init', type=list),
                           {'contamination': {'required': False, 'type': dict, 'keys': [
                               _leaf('kind', True, str),
                               _leaf('k', type=int),
                               _leaf('k_low', type=int),
                               _leaf('value', type=_NUMBER),
                               _leaf('low', type=list),
                               _leaf('high', type=list),
                               _leaf('upper', type=_NUMBER),
                               _leaf('replace', type=bool),
                               {'noise': {'required': False, 'type': dict, 'keys': [
                                   _leaf('distribution', True, str),
                                   _leaf('shapes', type=list),
                                   _leaf('loc', type=_NUMBER),
                                   _leaf('scale', type=_NUMBER),
                               ]}},
                           ]}},
                       ]}},
                       {'estimators': {'required': True, 'type': list, 'keys': [
                           {'estimator': {'required': True, 'type': dict, 'keys': [
                               _leaf('id', True, str),
                               _leaf('method', True, str),
                               _leaf('divergence', type=_NUMBER_OR_NAME),
                               _leaf('kernel', type=str),
                               _leaf('bandwidth', type=_NUMBER_OR_NAME),
                               _leaf('a', type=_NUMBER),
                               _leaf('escort', type=_NUMBERS_OR_NAME),
                               _leaf('noise', type=str),
                               _leaf('lambda_max', type=_NUMBER),
                               _leaf('init', type=list),
                               _leaf('ddof', type=int),
                           ]}},
                       ]}},
                       {'settings': {'required': False, 'type': dict, 'keys': [
                           {'quadrature': {'required': False, 'type': dict, 'keys': [
                               _leaf('abs_tol', type=_NUMBER),
                               _leaf('rel_tol', type=_NUMBER),
                               _leaf('max_subdivisions', type=int),
                               _leaf('fallback_gl_points', type=int),
                           ]}},
                           {'optimizer': {'required': False, 'type': dict, 'keys': [
                               _leaf('max_iters', type=int),
                               _leaf('x_tol', type=_NUMBER),
                               _leaf('f_tol', type=_NUMBER),
                               _leaf('restarts', type=int),
                               _leaf('initial_simplex_scale', type=_NUMBER),
                           ]}},
                           _leaf('init_shift', type=_NUMBER),
                           _leaf('jobs', type=int),
                       ]}},
                   ],
                   },
    },
]


def check_config(config):
    """Check that the important options are present and unknown options aren't."""
    try:
        result = check_required_keys(config, SIMLAB_SCHEMA)
        check_unsupported(config, SIMLAB_SCHEMA)
    except FailedInitialization:
        raise
    except Exception as e:
        raise FailedInitialization(f"Unexpected exception: {e}")
    return config if result else None


def default_config_path() -> str:
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), CONFIG_YAML)


def read_config(yaml_file=None) -> dict:
    """Open the experiment file (YAML or JSON) and check the contents."""
    yaml_file = yaml_file or default_config_path()
    if not os.path.isfile(yaml_file):
        raise FailedInitialization(f"experiment file '{yaml_file}' not found")
    try:
        config = config_to_dict(config_from_yaml(data=yaml_file, read_from_file=True))
    except Exception as e:
        error_message = buildYAMLExceptionString(exception=e, file=yaml_file)
        raise FailedInitialization(f"Unexpected exception: {error_message}")
    config = check_config(config)
    if not config:
        raise FailedInitialization(f"One or more errors detected in '{yaml_file}'")
    return config


def retrieve_options(config, key, option_list) -> dict:
    """Retrieve requested options."""
    if not config or key not in config.keys():
        return {}

    errors = False
    options = dict(config[key] or {})
    for option, value in option_list.items():
        required = value.get('required', None)
        type = value.get('type', None)
        if option not in options.keys():
            if required:
                _LOGGER.error(f"Missing required option in YAML file: '{option}'")
                errors = True
            continue
        v = options.get(option, None)
        if type and not isinstance(v, type):
            _LOGGER.error(f"Expected type '{_type_name(type)}' for option '{option}'")
            errors = True
    if errors:
        raise FailedInitialization(f"One or more errors detected in '{key}' YAML options")
    return options


if __name__ == '__main__':
    if sys.version_info[0] >= 3 and sys.version_info[1] >= 9:
        config = read_config(sys.argv[1] if len(sys.argv) > 1 else None)
    else:
        print("python 3.9 or better required")
