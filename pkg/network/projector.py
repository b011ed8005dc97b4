"""Projector heads g_v / g_w mapping encoder outputs to the joint unit sphere."""

from __future__ import annotations

import torch
import torch.nn as nn

DEGENERATE_NORM = 1e-12


class Projector(nn.Module):
    def __init__(self, width: int, proj_dim: int, bias: bool = True):
        super().__init__()
        self.proj = nn.Linear(width, proj_dim, bias=bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.proj(x)


def project_and_normalize(v: torch.Tensor, projector: Projector) -> torch.Tensor:
    """Project (..., width) to (..., proj_dim) and scale every row to unit L2 norm."""
    if not torch.isfinite(v).all():
        raise ValueError("Projector input contains non-finite values")
    z = projector(v)
    norm = z.norm(dim=-1, keepdim=True)
    if (norm < DEGENERATE_NORM).any():
        raise ValueError("degenerate embedding")
    return z / norm
