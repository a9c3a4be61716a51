"""Inception V3 with forward hooks at the four canonical tap points."""

from __future__ import annotations

import torch
from torchvision.models import inception_v3

# Tap module name per pooled feature dimension: first max-pool, second
# max-pool, the pre-aux mixed block, and the final mixed block.
TAP_MODULES = {
    64: "maxpool1",
    192: "maxpool2",
    768: "Mixed_6e",
    2048: "Mixed_7c",
}

DEPTHS = tuple(sorted(TAP_MODULES))

INPUT_SIDE = 299
PREPROCESSING = f"rgb_resize{INPUT_SIDE}_bilinear_scale[-1,1]"


class InceptionTaps(torch.nn.Module):
    """Runs Inception V3 once and captures pooled activations per depth.

    With `checkpoint` the given state dict is loaded; otherwise the weights
    are randomly initialized from `seed`, which is deterministic for a
    fixed torch version (useful for format and pipeline testing, not for
    cross-run score comparison with other extractors).
    """

    def __init__(self, depths, checkpoint: str | None = None, seed: int = 0):
        super().__init__()
        unknown = [d for d in depths if d not in TAP_MODULES]
        if unknown:
            raise ValueError(f"unsupported depths {unknown}; valid: {DEPTHS}")
        if not depths:
            raise ValueError("at least one depth required")
        self.depths = tuple(sorted(depths))
        torch.manual_seed(seed)
        self.net = inception_v3(weights=None, aux_logits=True,
                                init_weights=True)
        if checkpoint is not None:
            state = torch.load(checkpoint, map_location="cpu",
                               weights_only=True)
            self.net.load_state_dict(state)
        self.net.eval()
        self._captured: dict[int, torch.Tensor] = {}
        for depth in self.depths:
            module = getattr(self.net, TAP_MODULES[depth])
            module.register_forward_hook(self._make_hook(depth))

    def _make_hook(self, depth: int):
        def hook(_module, _inputs, output):
            # Global average pool: (n, c, h, w) -> (n, c).
            self._captured[depth] = output.mean(dim=(2, 3))
        return hook

    @torch.no_grad()
    def forward(self, batch: torch.Tensor) -> dict[int, torch.Tensor]:
        self._captured = {}
        self.net(batch)
        return {d: self._captured[d] for d in self.depths}


def preprocess(images: torch.Tensor) -> torch.Tensor:
    """Resize uint8 RGB batches to the network input and scale to [-1, 1]."""
    x = images.float() / 255.0
    x = torch.nn.functional.interpolate(
        x, size=(INPUT_SIDE, INPUT_SIDE), mode="bilinear", align_corners=False)
    return x * 2.0 - 1.0
