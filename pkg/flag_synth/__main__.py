"""`python -m flag_synth ...`"""

from .cli import app

app(prog_name="flag_synth")
