"""Digital twin of a three-unit run-of-the-river hydro plant.

Per-unit rule-based agents bias gate-flow setpoints and blade positions
to squeeze extra generation out of the current head and flow, coordinate
through a process-point message bus, and answer to three human roles
(operator, corporate dispatch, Corps) through a SCADA-style gateway.
"""

__version__ = "0.1.0"
