extensions = ["sphinx_ape"]

doctest_global_setup = """
from acoustic_microgen import Device, load_bundled, match_frequency
from acoustic_microgen.types import DesignVariable, Parameter
"""
