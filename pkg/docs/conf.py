#!/usr/bin/env python
#
# qdcformer documentation build configuration file.

import os
import sys
sys.path.insert(0, os.path.abspath('..'))

import qdcformer

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode', 'sphinx.ext.mathjax']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'qdcformer'
copyright = "2026, qdcformer developers"
author = "qdcformer developers"

version = qdcformer.__version__
release = qdcformer.__version__

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'

html_theme = 'alabaster'
html_static_path = ['_static']
htmlhelp_basename = 'qdcformerdoc'

latex_documents = [
    (master_doc, 'qdcformer.tex', 'qdcformer Documentation',
     'qdcformer developers', 'manual'),
]

man_pages = [
    (master_doc, 'qdcformer', 'qdcformer Documentation', [author], 1)
]
