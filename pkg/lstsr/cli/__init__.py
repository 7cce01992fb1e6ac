from .render import dump_grayscale, to_grayscale
