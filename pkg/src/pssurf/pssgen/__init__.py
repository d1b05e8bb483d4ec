"""Pss equation generators, immersion data and the built-in catalog."""
from .builtins import CATALOG, DEFAULTS, builtin, example_4param, family_sp, short_pulse, sine_gordon
from .generators import (
    Prop1Input,
    ReducibilityInput,
    ReducibilityVerdict,
    change_of_variable,
    check_reducibility,
    coefficients_of,
    generate_cor1,
    generate_prop1,
    invert,
    prop1_input_for_cor1,
    prop1_parts,
)
from .system import (
    ImmersionData,
    OneForm,
    PssSystem,
    dumps,
    from_document,
    load,
    loads,
    save,
    to_document,
)
