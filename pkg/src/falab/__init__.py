"""falab: a lab for training two-layer networks with backpropagation and
(regularized) feedback alignment, with an exact linear-dynamics oracle and a
Monte-Carlo theory-verification suite."""

__version__ = "0.1.0"
