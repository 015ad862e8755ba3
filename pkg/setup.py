"""
Installation steps:
1. Build wheel with
    python ./setup.py sdist bdist_wheel
2. Install wheel with
    pip install ./dist/provenance_ipc-0.1-py3-none-any.whl
2.1 Force install with option --force-reinstall
3. Run with the command
    provenance_ipc scenario paybuddy
"""

from setuptools import setup, find_packages

setup(
   name='provenance_ipc',
   version='0.1',
   author='Armaggheddon',
   author_email='your@email.com',
   description='Provenance carrying IPC for a simulated phone: signed statements, call chains and attested network requests.',
   packages=find_packages(exclude=['tests', 'tests.*']),
   python_requires='>=3.8',
   install_requires=['numpy', 'cryptography>=42', 'requests'],
   extras_require={
      'test': ['pytest'],
   },
   entry_points={
      'console_scripts': [
         'provenance_ipc=provenance_ipc.main:main',
      ],
   },
)
