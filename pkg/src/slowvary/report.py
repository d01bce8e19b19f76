"""Model reports: deterministic human-readable text and key/value trees."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import __version__


@dataclass
class ModelReport:
    """Reduced-model summary with stable ordering so goldens diff cleanly."""
    problem: str
    order: int
    grading: str
    pde: list = field(default_factory=list)            # human-readable lines
    coefficients: list = field(default_factory=list)   # (label, canonical expr)
    manifold: list = field(default_factory=list)       # (label, canonical expr)
    evolution: list = field(default_factory=list)      # (label, canonical expr)
    coupling_error: list = field(default_factory=list)
    transient_tag: str = "O(e^(-gamma*t)), gamma in (alpha, beta)"
    notes: list = field(default_factory=list)
    iteration_log: list = field(default_factory=list)
    tool_version: str = __version__

    def to_text(self) -> str:
        out = [f"model report: {self.problem} (order N={self.order})"]
        out.append(f"grading: {self.grading}")
        for line in self.pde:
            out.append(f"  {line}")
        if self.coefficients:
            out.append("COEFFICIENTS")
            out.extend(f"  {k} = {v}" for k, v in self.coefficients)
        if self.manifold:
            out.append("MANIFOLD")
            out.extend(f"  {k} = {v}" for k, v in self.manifold)
        if self.evolution:
            out.append("EVOLUTION")
            out.extend(f"  {k} = {v}" for k, v in self.evolution)
        if self.coupling_error:
            out.append("COUPLING_ERROR")
            out.extend(f"  {line}" for line in self.coupling_error)
        out.append(f"TRANSIENT_TAG {self.transient_tag}")
        for line in self.notes:
            out.append(f"note: {line}")
        if self.iteration_log:
            out.append("iterations:")
            out.extend(f"  {line}" for line in self.iteration_log)
        return "\n".join(out) + "\n"

    def to_tree(self) -> str:
        lines = ["report {"]

        def section(name, pairs):
            lines.append(f"  {name} {{")
            for k, v in pairs:
                lines.append(f"    {k} = {v}")
            lines.append("  }")

        section("provenance", [
            ("problem", self.problem),
            ("order", self.order),
            ("grading", self.grading),
            ("tool_version", self.tool_version),
        ])
        section("model", [(f"pde{i}", line) for i, line in enumerate(self.pde)])
        section("coefficients", self.coefficients)
        section("manifold", self.manifold)
        section("evolution", self.evolution)
        section("coupling_error",
                [(f"term{i}", line) for i, line in enumerate(self.coupling_error)])
        section("transient", [("tag", self.transient_tag)])
        section("notes", [(f"note{i}", line) for i, line in enumerate(self.notes)])
        section("iterations",
                [(f"pass{i}", line) for i, line in enumerate(self.iteration_log)])
        lines.append("}")
        return "\n".join(lines) + "\n"
